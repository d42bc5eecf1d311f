import csv
import io
import json
from typing import Any, Dict

from src.greens.kernel import GreensKernel


def kernel_to_dict(kernel: GreensKernel) -> Dict[str, Any]:
    return {
        "spec": kernel.spec.model_dump(exclude={"left_values", "right_values", "rhs"}),
        "sign": kernel.sign,
        "beta": kernel.beta,
        "t_offsets": list(kernel.t_grid.offsets),
        "s_offsets": list(kernel.s_grid.offsets),
        "table": kernel.table.tolist(),
    }


def kernel_to_json(kernel: GreensKernel) -> str:
    # repr-based float output round-trips every double
    return json.dumps(kernel_to_dict(kernel), indent=2)


def kernel_to_csv(kernel: GreensKernel) -> str:
    """Rows t, columns s; the header row and first column carry offsets."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t\\s"] + list(kernel.s_grid.offsets))
    for t, row in zip(kernel.t_grid.offsets, kernel.table):
        writer.writerow([t] + [format(v, ".17g") for v in row])
    return buf.getvalue()
