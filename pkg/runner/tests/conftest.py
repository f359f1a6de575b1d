def pytest_addoption(parser):
    parser.addoption(
        "--hf",
        action="store_true",
        default=False,
        help="run sanity tests that need downloaded caption/encoder weights",
    )
