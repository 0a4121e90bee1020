import pytest

from codeval.sandbox import IsolationConfig, create_workspace, destroy_workspace

from helpers import make_zip


@pytest.fixture
def direct_config():
    return IsolationConfig.direct()


@pytest.fixture
def isolated_config():
    return IsolationConfig.default()


@pytest.fixture
def make_workspace():
    """Factory building workspaces from {name: content} dicts; destroys
    everything it created at teardown."""
    created = []

    def factory(files, supports=()):
        workspace = create_workspace(make_zip(files),
                                     [make_zip(s) for s in supports])
        created.append(workspace)
        return workspace

    yield factory
    for workspace in created:
        destroy_workspace(workspace)
