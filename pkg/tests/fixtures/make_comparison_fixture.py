"""Generate the synthetic comparison dataset (not experimental data).

Values are plasma-model Au-Au pressures at 300 K; the half-widths are chosen
by hand around the plasma-Drude gap (about 35 mPa at 160 nm falling to
1.5 mPa at 480 nm) so that the expected exclusion intervals against Drude
theory can be enumerated by eye:

    d_nm  gap   ci95  ci70   outside95  outside70
    160   34.6  40    30     no         yes
    200   18.7  10    8      yes        yes
    240   11.3  8     6      yes        yes
    280   7.28  9     5      no         yes
    320   4.98  3     2      yes        yes
    360   3.55  3     2      yes        yes
    400   2.62  4     2      no         yes
    440   1.99  3     2.5    no         no
    480   1.55  1     0.8    yes        yes

Run from the repository root: python tests/fixtures/make_comparison_fixture.py
"""

from pathlib import Path

from thermocasimir import lifshitz as lf
from thermocasimir import materials as mt

ROWS = [(160, 40, 30), (200, 10, 8), (240, 8, 6), (280, 9, 5), (320, 3, 2),
        (360, 3, 2), (400, 4, 2), (440, 3, 2.5), (480, 1, 0.8)]


def main():
    lines = ["d_nm,value,ci95,ci70,unit"]
    plasma = mt.gold(model="plasma")
    for d_nm, ci95, ci70 in ROWS:
        cfg = lf.ThermalConfiguration(d_nm * 1e-9, 300.0, plasma)
        p = lf.pressure(cfg, 1e-10).total * 1e3
        lines.append(f"{d_nm},{p:.12e},{ci95},{ci70},mPa")
    out = Path(__file__).with_name("synthetic_plasma_au_pressure.csv")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
