"""Unit tests for core/logging.py."""

import logging
import warnings

import pytest

from core.logging import NOISY_LOGGERS, setup_logging


@pytest.fixture(autouse=True)
def restore_logging():
    """Undo root handlers, levels and warning capture left by setup_logging."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    noisy_levels = {name: logging.getLogger(name).level for name in NOISY_LOGGERS}
    logging.captureWarnings(False)
    yield
    logging.captureWarnings(False)
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
    for name, noisy_level in noisy_levels.items():
        logging.getLogger(name).setLevel(noisy_level)


class TestSetupLogging:
    def test_sets_root_level(self):
        setup_logging(level="DEBUG")
        assert logging.getLogger().level == logging.DEBUG
        setup_logging(level="warning")
        assert logging.getLogger().level == logging.WARNING

    def test_console_handler_writes_to_stderr(self):
        import sys

        setup_logging(level="INFO")
        handlers = logging.getLogger().handlers
        assert any(
            isinstance(h, logging.StreamHandler) and h.stream is sys.stderr for h in handlers
        )

    def test_adds_file_handler(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        setup_logging(level="INFO", log_file=log_file)
        handlers = logging.getLogger().handlers
        assert any(isinstance(h, logging.FileHandler) for h in handlers)
        assert log_file.parent.exists()

        logging.getLogger("cavity.test").info("hello")
        for h in handlers:
            h.flush()
        assert "hello" in log_file.read_text()

    def test_reconfigure_replaces_handlers(self, tmp_path):
        setup_logging(level="INFO", log_file=tmp_path / "a.log")
        setup_logging(level="INFO")
        handlers = logging.getLogger().handlers
        assert not any(isinstance(h, logging.FileHandler) for h in handlers)


class TestThirdPartyOutput:
    def test_noisy_loggers_raised_to_warning(self):
        setup_logging(level="DEBUG")
        for name in NOISY_LOGGERS:
            assert logging.getLogger(name).level == logging.WARNING

    def test_python_warnings_are_routed_to_logging(self):
        assert warnings.showwarning.__module__ != "logging"
        setup_logging(level="INFO")
        assert warnings.showwarning.__module__ == "logging"
