import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the full benchmark scenes')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='benchmark run, use --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)
