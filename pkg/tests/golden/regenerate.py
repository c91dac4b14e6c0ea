"""Rewrite the golden --help files: python tests/golden/regenerate.py"""
import contextlib
import io
import os
import pathlib

os.environ["COLUMNS"] = "100"

from landau_limit.cli import run, build_parser  # noqa: E402

HERE = pathlib.Path(__file__).parent


def help_text(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        run(argv + ["--help"])
    return buf.getvalue()


def commands():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    return list(sub.choices)


if __name__ == "__main__":
    (HERE / "help_main.txt").write_text(help_text([]))
    for cmd in commands():
        (HERE / f"help_{cmd}.txt").write_text(help_text([cmd]))
