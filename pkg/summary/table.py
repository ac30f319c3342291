__all__ = ["format_table", "RolloutSummaryJob"]

from sisyphus import *

Path = setup_path(__package__)

import dressing_core.lib.formats as formats


def format_table(data, header, row_names, col_names):
    """
    :param dict[(str, str), str] data: cell text at data[(col, row)]
    :param str header: title of the row name column
    :param list[str] row_names: rows in order of appearance
    :param list[str] col_names: columns in order of appearance
    :return: the table as right aligned text, one line per row
    :rtype: str
    """
    widths = [max([len(header)] + [len(r) for r in row_names])]
    widths += [
        max([len(c)] + [len(data.get((c, r), "")) for r in row_names])
        for c in col_names
    ]
    lines = [
        " | ".join("%*s" % (w, c) for w, c in zip(widths, [header] + col_names)),
        "-+-".join("-" * w for w in widths),
    ]
    for r in row_names:
        cells = [r] + [data.get((c, r), "") for c in col_names]
        lines.append(" | ".join("%*s" % (w, c) for w, c in zip(widths, cells)))
    return "\n".join(lines) + "\n"


class RolloutSummaryJob(Job):
    """
    Collects the metrics of several rollouts into one table and counts the successes.
    """

    def __init__(
        self,
        metrics_files,
        keys=("outcome", "steps", "min_l_true", "max_elbow_error"),
        precision=3,
    ):
        """
        :param dict[str, tk.Path] metrics_files: e.g. DressingRolloutJob.out_metrics per
            rollout name
        :param tuple[str] keys: metric columns of the table
        :param int precision: decimals of numeric cells
        """
        self.metrics_files = metrics_files
        self.keys = keys
        self.precision = precision

        self.out_table = self.output_path("summary.txt")
        self.out_success_rate = self.output_var("success_rate")

    def tasks(self):
        yield Task("run", mini_task=True)

    def run(self):
        names = sorted(self.metrics_files)
        data = {}
        successes = 0
        for name in names:
            metrics = formats.read_metrics(self.metrics_files[name])
            successes += metrics.get("outcome") == "Success"
            for key in self.keys:
                value = metrics.get(key, "")
                try:
                    if "." in value or "e" in value:
                        value = "%.*f" % (self.precision, float(value))
                except ValueError:
                    pass
                data[(key, name)] = value

        with open(self.out_table.get_path(), "wt") as f:
            f.write(format_table(data, "rollout", names, list(self.keys)))
        self.out_success_rate.set(successes / len(names) if names else 0.0)
