import argparse
import logging
import os

from dext.classify import classify
from dext.coeff import Coefficient, Line, PowerLaw
from dext.errors import DextError
from dext.settings import LOG_FORMAT, LOG_LEVEL
from dext.shoot import operator_deficiency

logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(
        description="Print the case and deficiency index of |x|^d on the line."
    )
    parser.add_argument(
        "exponents",
        nargs="*",
        type=float,
        default=[0.25, 0.5, 1.0, 1.25, 1.4, 1.5, 2.0],
        help="Symmetric exponents d = d- = d+",
    )
    parser.add_argument(
        "--output",
        default=None,
        help="Optional CSV file; the table is printed otherwise",
    )
    args = parser.parse_args()

    rows = ["exponent,case,deficiency_index,nu_l2_norm_sq"]
    for d in args.exponents:
        c = Coefficient(
            model=PowerLaw(exponent_left=d, exponent_right=d), domain=Line()
        )
        try:
            report = classify(c)
            index = operator_deficiency(c).index
            norm = report.profile("right").nu_l2_norm_sq
            rows.append(f"{d:g},{report.case},{index},{norm:.10g}")
        except DextError as e:
            logger.error(f"d={d:g}: {e.message}")
            rows.append(f"{d:g},,,")

    if args.output:
        os.makedirs(os.path.dirname(args.output) or ".", exist_ok=True)
        with open(args.output, "w", encoding="utf-8") as f:
            f.write("\n".join(rows) + "\n")
        logger.info(f"Table written to {args.output}")
    else:
        print("\n".join(rows))


if __name__ == "__main__":
    main()
