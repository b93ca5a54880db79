import re


def format_float(value: float | None) -> str:
    """Stable CSV rendering: 12 significant digits, empty for missing values."""
    if value is None:
        return ""
    return f"{float(value):.12g}"


def format_snr_db(value: float) -> str:
    # Sweep points come from start + i*step; round off the accumulated noise.
    text = f"{round(float(value), 9):.9f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def slugify(value: str) -> str:
    value = (value or "").strip().lower()
    value = value.replace("κ", "kappa").replace("μ", "mu")
    value = re.sub(r"[^a-z0-9.]+", "_", value)
    value = value.replace(".", "p")
    return value.strip("_") or "curve"


def curve_slug(preset: str, label: str) -> str:
    return f"{slugify(preset)}__{slugify(label)}"
