import datetime

import pytest
from importlib import resources

from formgraph.analysis import FormGraphBuilder
from formgraph.dom import extract_form_model, parse_document
from formgraph.simulator import load_form_spec, render_page

SPEC_NAMES = [
    "aircanada_multicity",
    "site_search",
    "event_search",
    "account_registration",
    "shipment_quote",
    "hotel_booking",
]

FIXED_NOW = datetime.datetime(2026, 3, 1, 12, 0, 0)


def spec_path(name: str):
    return resources.files("formgraph.specs").joinpath(f"{name}.json")


@pytest.fixture(scope="session")
def travel_spec():
    return load_form_spec(spec_path("aircanada_multicity"))


@pytest.fixture(scope="session")
def travel_html(travel_spec):
    return render_page(travel_spec)


@pytest.fixture(scope="session")
def travel_tree(travel_html):
    return parse_document(travel_html)


@pytest.fixture(scope="session")
def travel_model(travel_tree):
    return extract_form_model(travel_tree)


@pytest.fixture(scope="session")
def travel_analysis(travel_html):
    return FormGraphBuilder().analyze_html(travel_html)
