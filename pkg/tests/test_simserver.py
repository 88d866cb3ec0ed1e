import threading

import pytest

from formgraph.errors import ExecutorFailure
from formgraph.simserver import RemoteExecutor, make_server
from formgraph.submission import SimulatorExecutor


@pytest.fixture()
def served(travel_spec):
    server = make_server(travel_spec)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield RemoteExecutor(f"http://{host}:{port}")
    server.shutdown()


class TestExecutorProtocol:
    def test_page_round_trip(self, served, travel_spec):
        state = served.page()
        assert state.url == travel_spec.base_url()
        assert "From 1" in state.html

    def test_fill_and_submit_matches_direct_executor(self, served, travel_spec):
        direct = SimulatorExecutor(travel_spec)
        for executor in (served, direct):
            executor.navigate(travel_spec.base_url())
            for label, value in travel_spec.success_witness.items():
                executor.fill(label, value)
            executor.submit()
        assert served.page() == direct.page()

    def test_failure_page_served(self, served, travel_spec):
        served.navigate(travel_spec.base_url())
        served.fill("From 1", "abcdefg")
        served.submit()
        assert "valid point of origin" in served.page().html

    def test_bad_fill_target_raises(self, served):
        served.navigate("")
        with pytest.raises(ExecutorFailure):
            served.fill("No Such Field", "x")

    def test_unreachable_endpoint(self):
        executor = RemoteExecutor("http://127.0.0.1:9", timeout=0.2)
        with pytest.raises(ExecutorFailure):
            executor.page()
