"""
JSON-lines report sink and reader.

Lines are written with fixed key order and no timestamps, so equal seeds give byte-identical files.
"""
import json

import click
import numpy as np


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(record: dict) -> str:
    return json.dumps(record, separators=(',', ':'), default=_to_builtin)


class JsonLinesWriter:
    """
    Write one JSON object per line to a file, or to stdout for '-' or None; each line is flushed as it is written
    """
    def __init__(self, path: str | None):
        self.path = path
        self.handle = None
        self.count = 0

    def __enter__(self) -> 'JsonLinesWriter':
        if self.path in (None, '-'):
            self.handle = click.get_text_stream('stdout')
        else:
            self.handle = open(self.path, 'w', encoding='utf-8', newline='\n')
        return self

    def __exit__(self, *exc) -> None:
        if self.path not in (None, '-'):
            self.handle.close()

    def write(self, record: dict) -> None:
        self.handle.write(dumps(record) + '\n')
        self.handle.flush()
        self.count += 1


def read_json_lines(paths: list[str]) -> list[dict]:
    """
    Every non-empty line of every file, with the source file recorded under '_source'
    """
    records = []
    for path in paths:
        with open(path, encoding='utf-8') as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append({**json.loads(line), '_source': path})
    return records
