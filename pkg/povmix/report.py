import orjson

from povmix.classifier import DecisionTrace


def format_json(trace: DecisionTrace) -> str:
    return orjson.dumps(trace.to_report()).decode()


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_text(trace: DecisionTrace, title: str = "Tail category") -> str:
    """
    Aligned, human-readable rendering of a decision trace. The layout may
    change between versions; use the JSON report for machine consumption.
    """
    rows = [
        ("category", str(trace.category)),
        ("branch", trace.branch.value),
        ("threshold u", _fmt(trace.u)),
        ("excesses", _fmt(trace.n_excess)),
        ("gamma hat", _fmt(trace.gamma_hat)),
        ("sigma hat", _fmt(trace.sigma_hat)),
        ("AD stage 1 (T, p)", f"{_fmt(trace.mad1_t)}, {_fmt(trace.mad1_p)}"),
        ("deviance (D, p)", f"{_fmt(trace.dev_stat)}, {_fmt(trace.dev_p)}"),
        ("jittered sigma", _fmt(trace.sigma_jitter)),
        ("AD stage 2 (T, p)", f"{_fmt(trace.mad2_t)}, {_fmt(trace.mad2_p)}"),
    ]
    width = max(len(name) for name, _ in rows)
    body = "\n".join(f"  {name.ljust(width)}  {value}" for name, value in rows)

    response = f"""{title}

{body}
""".rstrip()

    response += f"""

Note:
alpha={trace.alpha:g}, bootstrap size={trace.n_boot}, quantile={trace.threshold_p:g}, seed={trace.seed}
"""
    return response.rstrip()
