def pytest_configure(config):
    config.addinivalue_line("markers", "slow: heavier symbolic or numeric checks")
