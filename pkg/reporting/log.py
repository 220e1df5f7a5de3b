"""
    The logging surface of pipescan: timestamped lines on the console and in a log file
"""
import os
import threading
import time

import clrprint

LOG_FILE_NAME = os.path.join("logs", "log.txt")
""" The default log file """

QUIET = 0
NORMAL = 1
VERBOSE = 2

_log_file = LOG_FILE_NAME
_verbosity = NORMAL
_lock = threading.Lock()


def configure(log_file: str = LOG_FILE_NAME, verbosity: int = NORMAL):
    """
    :param log_file: The file every line is appended to
    :param verbosity: QUIET keeps warnings and errors, VERBOSE adds progress lines
    """
    global _log_file, _verbosity
    _log_file = log_file
    _verbosity = verbosity


def verbosity() -> int:
    return _verbosity


def _stamp(text) -> str:
    year, month, mday, hour, minute, second, _, _, _ = time.localtime()
    datetime = f"{mday}/{month}/{year} {hour}:{minute}:{second}"
    return f"[{datetime}] {text}"


def _write(line: str):
    directory = os.path.dirname(_log_file)
    with _lock:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(_log_file, "a") as f:
            f.write(line + "\n")


def log(text, level: int = NORMAL):
    """
    Prints a timestamped line and appends it to the log file

    :param text: The message
    :param level: The verbosity from which the line is printed, it is always written to file
    """
    line = _stamp(text)
    _write(line)
    if _verbosity >= level:
        print(line)


def progress(text):
    """ A per-band or per-epoch line, printed only when verbose """
    log(text, VERBOSE)


def success(text):
    line = _stamp(text)
    _write(line)
    if _verbosity >= NORMAL:
        clrprint.clrprint(line, clr='g')


def warn(text):
    line = _stamp(f"warning: {text}")
    _write(line)
    clrprint.clrprint(line, clr='y')


def error(text):
    line = _stamp(f"error: {text}")
    _write(line)
    clrprint.clrprint(line, clr='r')


def reset():
    """ Empties the log file """
    directory = os.path.dirname(_log_file)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(_log_file, "w") as f:
        f.write("")
