"""
Batch verification of the product Stokes theorem.
Runs the randomized Stokes suite and the standard-simplex identity check
and prints the worst log discrepancies.
"""

import sys
import os
import time

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
from loguru import logger

from app.calculus.stokes import proof_identity_check, random_exponential_field, run_suite, suite_cases
from app.config import settings
from app.models import QuadratureRule


def verify_stokes(count: int, seed: int, threshold: float) -> bool:
    """
    Run count randomized Stokes cases.

    Args:
        count: Number of cases
        seed: Generator seed
        threshold: Largest acceptable log discrepancy

    Returns:
        True when every case is within threshold
    """
    logger.info("=" * 80)
    logger.info(f"Stokes suite: {count} cases, seed {seed}")
    logger.info("=" * 80)

    started = time.perf_counter()
    reports = run_suite(suite_cases(count, seed), QuadratureRule(kind="gauss", order=16))
    elapsed = time.perf_counter() - started

    failures = [(i, r) for i, r in enumerate(reports) if r.log_discrepancy > threshold]
    worst = max(r.log_discrepancy for r in reports) if reports else 0.0
    print(f"Stokes cases:        {len(reports)}")
    print(f"Worst discrepancy:   {worst:.3e}")
    print(f"Elapsed:             {elapsed:.2f} s")
    for i, report in failures:
        print(f"  case {i}: ln lhs={report.log_lhs!r} ln rhs={report.log_rhs!r}")
    return not failures


def verify_identity(count: int, seed: int, threshold: float) -> bool:
    """Three-way identity check for random e^{poly} coefficients with n in {1, 2}."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(count):
        n = 1 + i % 2
        report = proof_identity_check(random_exponential_field(rng, n + 1), n)
        worst = max(worst, report.max_discrepancy)
        logger.debug(f"identity case {i} (n={n}): {report.max_discrepancy:.3e}")
    print(f"Identity cases:      {count}")
    print(f"Worst discrepancy:   {worst:.3e}")
    return worst <= threshold


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Verify the product Stokes theorem numerically")
    parser.add_argument("--cases", type=int, default=100, help="Number of randomized Stokes cases")
    parser.add_argument("--identity-cases", type=int, default=20, help="Number of identity cases")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threshold", type=float, default=1e-8, help="Largest acceptable log discrepancy")

    args = parser.parse_args()

    logger.remove()
    logger.add(
        sys.stderr,
        level=settings.log_level,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
    )

    ok = verify_stokes(args.cases, args.seed, args.threshold)
    ok = verify_identity(args.identity_cases, args.seed, args.threshold) and ok
    sys.exit(0 if ok else 1)
