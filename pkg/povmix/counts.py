from pathlib import Path

import numpy as np

from povmix.errors import CountsFileError

MAX_COUNT = int(np.iinfo(np.int64).max)


def load_counts(path) -> np.ndarray:
    """
    Read one non-negative integer per line; blank lines and `#` comments
    are skipped. Errors name the offending line.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise CountsFileError(f"{path} is not valid UTF-8") from None
    except OSError as e:
        raise CountsFileError(f"cannot read {path}: {e.strerror or e}") from e

    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            value = int(line)
        except ValueError:
            raise CountsFileError(f"'{line}' is not an integer", line=lineno) from None
        if value < 0:
            raise CountsFileError(f"negative count {value}", line=lineno)
        if value > MAX_COUNT:
            raise CountsFileError(f"count {value} exceeds {MAX_COUNT}", line=lineno)
        values.append(value)

    if not values:
        raise CountsFileError("no observations")
    return np.asarray(values, dtype=np.int64)


def write_counts(path, counts) -> None:
    Path(path).write_text("".join(f"{int(c)}\n" for c in counts), encoding="utf-8")
