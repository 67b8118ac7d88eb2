"""Published reference energies (hartree) kept as full-digit strings"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import mpmath
import pandas as pd

from analysis import OBSERVABLES, SequenceResult
from config import ANALYSIS_CONFIG
from errors import InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Benchmark:
    """A published grid ladder: rows of (m, Ne, N, E_rel, E_nrel, shift)"""
    name: str
    Z1: float
    Z2: float
    R: float
    nu: int
    D_max: float
    p: int
    rows: Tuple[Tuple[int, int, int, str, str, str], ...]
    extrapolated: Dict[str, str]

    def row(self, m: int) -> Dict[str, str]:
        for rm, Ne, N, E_rel, E_nrel, shift in self.rows:
            if rm == m:
                return {"m": rm, "Ne": Ne, "N": N, "E_rel": E_rel, "E_nrel": E_nrel,
                        "shift": shift}
        raise InvalidParameterError(f"{self.name} has no rung m={m}")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.rows),
                            columns=["m", "Ne", "N", "E_rel", "E_nrel", "shift"])


H2_PLUS = Benchmark(
    name="h2plus", Z1=1.0, Z2=1.0, R=2.0, nu=8, D_max=40.0, p=10,
    rows=(
        (6, 72, 3721, "-1.10264158076265658336304", "-1.10263421422500083644351", "-7.366537655746919537216e-6"),
        (8, 128, 6561, "-1.10264158103129731540804", "-1.10263421449366618700516", "-7.366537631128402879085e-6"),
        (10, 200, 10201, "-1.10264158103254876503352", "-1.10263421449491805349370", "-7.366537630711539825949e-6"),
        (12, 288, 14641, "-1.10264158103257440524021", "-1.10263421449494370230232", "-7.366537630702937883947e-6"),
        (14, 392, 19881, "-1.10264158103257701626914", "-1.10263421449494631361918", "-7.366537630702649958534e-6"),
        (16, 512, 25921, "-1.10264158103257716018477", "-1.10263421449494645757546", "-7.366537630702609305534e-6"),
        (18, 648, 32761, "-1.10264158103257716288008", "-1.10263421449494646027071", "-7.366537630702609365171e-6"),
        (20, 800, 40401, "-1.10264158103257716398460", "-1.10263421449494646137541", "-7.366537630702609181867e-6"),
        (22, 968, 48841, "-1.10264158103257716409888", "-1.10263421449494646148972", "-7.366537630702609157530e-6"),
        (24, 1152, 58081, "-1.10264158103257716411642", "-1.10263421449494646150726", "-7.366537630702609156421e-6"),
        (26, 1352, 68121, "-1.10264158103257716411686", "-1.10263421449494646150770", "-7.366537630702609156250e-6"),
        (28, 1568, 78961, "-1.10264158103257716411800", "-1.10263421449494646150884", "-7.366537630702609156039e-6"),
        (30, 1800, 90601, "-1.10264158103257716411811", "-1.10263421449494646150895", "-7.366537630702609156055e-6"),
    ),
    extrapolated={"E_rel": "-1.10264158103257716411814",
                  "E_nrel": "-1.10263421449494646150898",
                  "shift": "-7.3665376307026091560584e-6"},
)

TH2 = Benchmark(
    name="th2", Z1=90.0, Z2=90.0, R=2.0 / 90.0, nu=10, D_max=0.35, p=10,
    rows=(
        (6, 72, 3721, "-9504.7566277711897646180", "-8931.337058411524371542", "-573.4195693596653930759"),
        (8, 128, 6561, "-9504.7566483577412426133", "-8931.337137096470274648", "-573.4195112612709679648"),
        (10, 200, 10201, "-9504.7566484301451994401", "-8931.337137399365527444", "-573.4195110307796719956"),
        (12, 288, 14641, "-9504.756648433886680448", "-8931.337137408143475088", "-573.4195110257432053607"),
        (14, 392, 19881, "-9504.756648434005781759", "-8931.337137409057756356", "-573.4195110249480254030"),
        (16, 512, 25921, "-9504.756648434008746274", "-8931.337137409063219487", "-573.4195110249455267868"),
        (18, 648, 32761, "-9504.756648434009421628", "-8931.337137409066302506", "-573.4195110249431191218"),
        (20, 800, 40401, "-9504.756648434009483622", "-8931.337137409066299523", "-573.4195110249431840987"),
        (22, 968, 48841, "-9504.756648434009496581", "-8931.337137409066335431", "-573.4195110249431611496"),
        (24, 1152, 58081, "-9504.756648434009499723", "-8931.337137409066337662", "-573.4195110249431620606"),
        (26, 1352, 68121, "-9504.756648434009500459", "-8931.337137409066338069", "-573.4195110249431623896"),
        (28, 1568, 78961, "-9504.756648434009500656", "-8931.337137409066338170", "-573.4195110249431624852"),
        (30, 1800, 90601, "-9504.756648434009500723", "-8931.337137409066338216", "-573.4195110249431625066"),
    ),
    extrapolated={"E_rel": "-9504.756648434009500748",
                  "E_nrel": "-8931.337137409066338235",
                  "shift": "-573.419511024943162514"},
)

BENCHMARKS = {b.name: b for b in (H2_PLUS, TH2)}

# D_max -> (shift at the densest grid, extrapolated shift), H2+ with nu=8
H2_PLUS_DMAX_SHIFT = {
    30.0: ("-7.3665376307026091560591e-6", "-7.3665376307026091560576e-6"),
    40.0: ("-7.3665376307026091560546e-6", "-7.3665376307026091560583e-6"),
    50.0: ("-7.3665376307026091560635e-6", "-7.3665376307026091560581e-6"),
    60.0: ("-7.3665376307026091560496e-6", "-7.3665376307026091560250e-6"),
}

# D_max -> extrapolated E_rel, Th2 with nu=10
TH2_DMAX_E_REL = {
    0.300: "-9504.7566484340095007351",
    0.325: "-9504.7566484340095007376",
    0.335: "-9504.7566484340095007368",
    0.350: "-9504.7566484340095007373",
    0.365: "-9504.7566484340095007383",
    0.375: "-9504.7566484340095007387",
    0.400: "-9504.7566484340095007371",
}

# Final values: shift at the working nu added to a nu=2 nonrelativistic limit
FINAL_VALUES = {
    "h2plus": {"shift": "-0.0000073665376307026091560584",
               "E_nrel": "-1.10263421449494646150896894154",
               "E_rel": "-1.10264158103257716411812499995",
               "literature": "-1.102641581032577164118124999957656"},
    "th2": {"shift": "-573.4195110249431625138",
            "E_nrel": "-8931.3371374090663382226",
            "E_rel": "-9504.756648434009500737",
            "literature": "-9504.756648434009500732"},
}


def get_benchmark(name: str) -> Benchmark:
    if name not in BENCHMARKS:
        raise InvalidParameterError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    return BENCHMARKS[name]


def compare_to_benchmark(result: SequenceResult, name: str,
                         observables: Optional[List[str]] = None) -> pd.DataFrame:
    """Per-rung deviation computed - published for rungs present in both"""
    bench = get_benchmark(name)
    observables = observables or list(OBSERVABLES)
    published = {row[0]: row for row in bench.rows}
    rows = []
    with mpmath.workdps(ANALYSIS_CONFIG["mp_dps"]):
        for rung in result.rungs:
            if not rung.ok or rung.m not in published:
                continue
            ref = bench.row(rung.m)
            row = {"m": rung.m, "N": rung.N}
            for obs in observables:
                value = rung.value(obs)
                row[f"d_{obs}"] = float(mpmath.mpf(value) - mpmath.mpf(ref[obs]))
            rows.append(row)
    if not rows:
        logger.warning(f"no rung of this run matches the {name} ladder")
    return pd.DataFrame(rows, columns=["m", "N"] + [f"d_{o}" for o in observables])
