import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay acceptance verdict lines after capture is torn down."""
    module = sys.modules.get("test_gan_acceptance")
    verdicts = getattr(module, "VERDICTS", None) if module else None
    if verdicts:
        terminalreporter.section("image recovery acceptance")
        for line in verdicts:
            terminalreporter.write_line(line)
