"""Monte Carlo estimates of e_b and p_con against the exact values as n grows.

    python3 scripts/mc_convergence.py --channel depolarizing:0.1 --M 4 --theta pi/4
"""

import argparse
import math

from qkd_rotsym import mc
from qkd_rotsym.cli import parse_angle, parse_channel
from qkd_rotsym.protocol import ProtocolParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=4)
    ap.add_argument("--theta", default="pi/4")
    ap.add_argument("--channel", default="depolarizing:0.1")
    ap.add_argument("--sizes", default="1e4,3e4,1e5,3e5,1e6,3e6")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--test-fraction", type=float, default=0.0)
    a = ap.parse_args(argv)

    params = ProtocolParams(a.M, parse_angle(a.theta))
    channel = parse_channel(a.channel)
    print(f"{'n':>9} {'e_b_hat':>10} {'se':>9} {'z':>7} {'p_con_hat':>10} {'se':>9} {'z':>7}  se*sqrt(n)")
    for n in (int(float(s)) for s in a.sizes.split(",")):
        c = mc.estimate_vs_analytic(mc.SimulationConfig(params, channel, n, a.seed, a.test_fraction))
        s = c.stats
        print(f"{n:9d} {s.e_b_hat:10.6f} {s.e_b_se:9.2e} {c.z_e_b:7.2f} "
              f"{s.p_con_hat:10.6f} {s.p_con_se:9.2e} {c.z_p_con:7.2f}  {s.e_b_se * math.sqrt(n):.4f}")
    print(f"exact: e_b={c.e_b_analytic:.6f} p_con={c.p_con_analytic:.6f}")


if __name__ == "__main__":
    main()
