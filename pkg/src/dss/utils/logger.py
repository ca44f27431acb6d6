import os
import json
import datetime
import logging

DEFAULT_LOG_PATH = os.environ.get(
    "DSS_LOG_DIR", os.path.join(os.path.expanduser("~"), "logs")
)
RUN_TIMESTAMP = datetime.datetime.now().strftime("%Y_%m_%d_%H_%M_%S")

# LogRecord attributes that are not user supplied ``extra`` fields
_RESERVED_RECORD_KEYS = set(
    logging.LogRecord("", 0, "", 0, "", None, None).__dict__.keys()
) | {"message", "asctime"}


class LogFormatter(logging.Formatter):
    """
    Logging colored formatter, adapted from https://stackoverflow.com/a/56944256/3638629.

    This class provides a logging formatter that adds colors to log messages
    based on their severity level.

    :ivar fmt: The format string used for log messages.
    :vartype fmt: str
    :ivar FORMATS: A dictionary mapping logging levels to their colored format strings.
    :vartype FORMATS: Dict[int, str]
    """

    grey = "\x1b[38;21m"
    blue = "\x1b[38;5;39m"
    yellow = "\x1b[38;5;226m"
    red = "\x1b[38;5;196m"
    bold_red = "\x1b[31;1m"
    reset = "\x1b[0m"

    def __init__(self, fmt):
        super().__init__()
        self.fmt = fmt
        self.FORMATS = {
            logging.DEBUG: self.grey + self.fmt + "%(message)s" + self.reset,
            logging.INFO: self.blue + self.fmt + self.reset + "%(message)s",
            logging.WARNING: self.yellow + self.fmt + "%(message)s" + self.reset,
            logging.ERROR: self.red + self.fmt + "%(message)s" + self.reset,
            logging.CRITICAL: self.bold_red + self.fmt + "%(message)s" + self.reset,
        }

    def format(self, record):
        log_fmt = self.FORMATS.get(record.levelno)
        formatter = logging.Formatter(log_fmt)
        return formatter.format(record)


class JsonLineFormatter(logging.Formatter):
    """
    Formats each record as one JSON object per line.

    The object always holds ``time``, ``logger``, ``level`` and ``message``;
    anything passed through ``extra=`` is copied next to them so that
    iteration reports and search statistics stay machine readable.
    """

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": datetime.datetime.fromtimestamp(record.created).isoformat(),
            "logger": record.name,
            "level": record.levelname,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED_RECORD_KEYS and not key.startswith("_"):
                payload[key] = value
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def getLogger(
    name: str,
    consoleLevel: int = logging.INFO,
    fileLevel: int = logging.DEBUG,
    fmt: str = "%(asctime)s - %(name)s - [%(levelname)s]: ",
    log_path: str = os.path.join(DEFAULT_LOG_PATH, RUN_TIMESTAMP),
    log_file: str = "default.log",
) -> logging.Logger:
    """
    Set up and return a logger with both console and file handlers.

    The console gets colored human readable lines, the file gets line-delimited
    JSON. Calling it twice with the same name returns the already configured
    logger without stacking handlers.

    :param name: The name of the logger.
    :type name: str
    :param consoleLevel: The logging level for the console handler.
    :type consoleLevel: int
    :param fileLevel: The logging level for the file handler.
    :type fileLevel: int
    :param fmt: The prefix format string for console messages.
    :type fmt: str
    :param log_path: The directory where log files will be saved.
        Default is ``$DSS_LOG_DIR`` (or ``~/logs``) plus the process start timestamp.
    :type log_path: str
    :param log_file: The name of the log file, relative to ``log_path``.
    :type log_file: str

    :return: The configured logger.
    :rtype: logging.Logger
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger
    log_full_path = os.path.join(log_path, log_file)
    os.makedirs(os.path.dirname(log_full_path), exist_ok=True)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False
    # stdout handler for logging to the console
    stdout_handler = logging.StreamHandler()
    stdout_handler.setLevel(consoleLevel)
    stdout_handler.setFormatter(LogFormatter(fmt))
    # File handler for line-delimited JSON
    file_handler = logging.FileHandler(log_full_path)
    file_handler.setLevel(fileLevel)
    file_handler.setFormatter(JsonLineFormatter())
    logger.addHandler(stdout_handler)
    logger.addHandler(file_handler)
    return logger
