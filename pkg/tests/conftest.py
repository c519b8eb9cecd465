def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance")
        for k, (ok, _) in sorted(test_acceptance.RESULTS.items()):
            terminalreporter.write_line(f"criterion {k}: {'pass' if ok else 'FAIL'}")
