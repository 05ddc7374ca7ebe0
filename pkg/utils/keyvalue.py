"""
Flat key-value text documents

One entry per line, written ``key: value`` or ``key = value``. Keys may be
dotted (``model.sigma``); ``#`` starts a comment. Values are scalars or
comma-separated lists of scalars. Configs, reports and ground-state
sidecars all use this format.
"""
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from utils.errors import ConfigParseError, LabIoError

KEY_CHARACTERS = set('abcdefghijklmnopqrstuvwxyz0123456789_.-')


def coerce_scalar(raw: str) -> Any:
    """Interpret a token as bool, None, int, float or plain string"""
    text = raw.strip()
    lowered = text.lower()
    if lowered in ('true', 'yes', 'on'):
        return True
    if lowered in ('false', 'no', 'off'):
        return False
    if lowered in ('none', 'null', ''):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in '"\'':
        return text[1:-1]
    return text


def coerce_value(raw: str) -> Any:
    if ',' in raw:
        return [coerce_scalar(token) for token in raw.split(',') if token.strip()]
    return coerce_scalar(raw)


def parse_lines(text: str) -> List[Tuple[int, str, Any]]:
    """
    Split a document into (line number, key, value) entries

    Args:
        text: Document text

    Returns:
        Entries in document order; duplicate keys are rejected
    """
    entries = []
    seen = {}
    for number, line in enumerate(text.splitlines(), 1):
        content = line.split('#', 1)[0].strip()
        if not content:
            continue
        separators = [i for i in (content.find(':'), content.find('=')) if i >= 0]
        if not separators:
            raise ConfigParseError("expected 'key: value' or 'key = value'", line=number)
        split = min(separators)
        key = content[:split].strip().lower()
        if not key or not set(key) <= KEY_CHARACTERS or key.startswith('.') or key.endswith('.'):
            raise ConfigParseError("malformed key", line=number, key=key or None)
        if key in seen:
            raise ConfigParseError(f"duplicate key (first set on line {seen[key]})", line=number, key=key)
        seen[key] = number
        entries.append((number, key, coerce_value(content[split + 1:])))
    return entries


def parse_document(text: str) -> Dict[str, Any]:
    return {key: value for _, key, value in parse_lines(text)}


def format_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if value is None:
        return 'none'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_document(values: Dict[str, Any], header: str = '') -> str:
    """Inverse of parse_document for scalars and lists"""
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            text = ', '.join(format_scalar(v) for v in value)
            if len(value) == 1:
                text += ','
        else:
            text = format_scalar(value)
        lines.append(f"{key}: {text}")
    return '\n'.join(lines) + '\n'


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> Path:
    """Write bytes through a temporary file in the target directory, then rename"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
        try:
            with os.fdopen(fd, 'wb') as handle:
                handle.write(payload)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        raise LabIoError(f"Error writing {path}: {str(e)}") from e
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    return atomic_write_bytes(path, text.encode('utf-8'))


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise LabIoError(f"Error reading {path}: {str(e)}") from e
    return parse_document(text)
