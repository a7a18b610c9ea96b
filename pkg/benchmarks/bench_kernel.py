"""Compare the compiled and pure-Python move-generation kernels.

    python3 benchmarks/bench_kernel.py [--depth 4] [--repeat 3]

Both kernels are imported directly, so the CHESSFORGE_PURE_PYTHON switch
does not matter here. Results must agree; timings are best-of-``repeat``.
"""

import argparse
import sys
import time

from chessforge.core import _kernel_py, parse_fen

try:
    from chessforge.core import _kernel as _kernel_c
except ImportError:
    _kernel_c = None

POSITIONS = {
    "start": "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1",
    "kiwipete": "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1",
    "endgame": "8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1",
}


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(depth, search_depth, repeat):
    kernels = [("python", _kernel_py)]
    if _kernel_c is not None:
        kernels.insert(0, ("cython", _kernel_c))
    rows = []
    for name, fen in POSITIONS.items():
        b = parse_fen(fen)
        white = b.white_to_move
        d = depth - 1 if name == "kiwipete" else depth
        timings = {}
        answers = set()
        for kname, k in kernels:
            t, n = best_of(lambda: k.perft(b.squares, white, b.castling, b.ep, d), repeat)
            timings[kname] = t
            answers.add(int(n))
        rows.append((f"perft {name} d{d}", answers.pop() if len(answers) == 1 else None, timings))

        roots = list(_kernel_py.gen_legal(b.squares, white, b.castling, b.ep))
        timings, answers = {}, set()
        for kname, k in kernels:
            t, (res, _) = best_of(lambda: k.analyse(b.squares, white, b.castling, b.ep, search_depth, roots), repeat)
            timings[kname] = t
            answers.add(tuple(s for s, _ in res))
        rows.append((f"analyse {name} d{search_depth}", "same" if len(answers) == 1 else None, timings))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=4, help="perft depth (kiwipete runs one less)")
    ap.add_argument("--search-depth", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernel_c is None:
        print("compiled kernel not built; timing the Python kernel only")
    rows = run(args.depth, args.search_depth, args.repeat)
    ok = True
    print(f"{'case':<26}{'result':>10}{'cython s':>12}{'python s':>12}{'speedup':>10}")
    for case, result, t in rows:
        ok &= result is not None
        c, p = t.get("cython"), t["python"]
        speed = f"{p / c:.1f}x" if c else "-"
        print(f"{case:<26}{str(result if result is not None else 'MISMATCH'):>10}"
              f"{(f'{c:.4f}' if c else '-'):>12}{p:>12.4f}{speed:>10}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
