import importlib.resources

import numpy as np
import pytest

from syncflow import (
    CaseFormatError,
    network_from_json,
    network_to_json,
    parse_matpower,
    to_network,
    write_results_csv,
)
from syncflow.caseio import ResultRecord, fmt


def _case_text():
    return (importlib.resources.files("syncflow") / "data" / "case30.m"
            ).read_text()


def test_parse_packaged_case():
    case = parse_matpower(_case_text())
    assert case.base_mva == 100.0
    assert len(case.buses) == 30
    assert len(case.branches) == 41
    assert len(case.gens) == 6
    assert case.buses[0] == (1, 0.0)
    assert case.buses[1] == (2, 21.7)


def test_to_network_balances_and_scales():
    case = parse_matpower(_case_text())
    net = to_network(case)
    assert net.node_count == 30
    assert net.edge_count == 41
    assert abs(net.injections.sum()) < 1e-12
    assert np.all(net.couplings > 0)
    scaled = to_network(case, p_f=2.5)
    assert np.allclose(scaled.injections, 2.5 * net.injections)


def test_out_of_service_branch_dropped():
    text = _case_text().replace(
        "\t29\t30\t0.24\t0.45\t0\t16\t16\t16\t0\t0\t1\t-360\t360;",
        "\t29\t30\t0.24\t0.45\t0\t16\t16\t16\t0\t0\t0\t-360\t360;")
    case = parse_matpower(text)
    assert len(case.branches) == 40


def test_parse_errors():
    with pytest.raises(CaseFormatError):
        parse_matpower("function mpc = x\nmpc.baseMVA = 100;\n")  # no blocks
    with pytest.raises(CaseFormatError):
        parse_matpower(_case_text().replace("mpc.gen =", "mpc.generators ="))
    bad = _case_text().replace("\t1\t2\t0.02\t0.06", "\t1\t99\t0.02\t0.06")
    with pytest.raises(CaseFormatError):
        to_network(parse_matpower(bad))


def test_nonpositive_reactance_rejected():
    bad = _case_text().replace("\t1\t2\t0.02\t0.06", "\t1\t2\t0.02\t-0.06")
    with pytest.raises(CaseFormatError):
        to_network(parse_matpower(bad))


def test_json_round_trip():
    net = to_network(parse_matpower(_case_text()))
    clone = network_from_json(network_to_json(net))
    assert np.array_equal(clone.tails, net.tails)
    assert np.array_equal(clone.heads, net.heads)
    assert np.array_equal(clone.couplings, net.couplings)
    assert np.array_equal(clone.injections, net.injections)
    assert clone.labels == net.labels


def test_json_errors():
    with pytest.raises(CaseFormatError):
        network_from_json("not json")
    with pytest.raises(CaseFormatError):
        network_from_json('{"schema": 99, "nodes": [], "edges": []}')


def test_results_csv_format():
    rec = ResultRecord(edge=0, tail="1", head="2", coupling=1.0,
                       f_lin=0.1, f_approx=0.1, f_rp=0.1, loading=0.1,
                       bound_per_line=0.0)
    text = write_results_csv([rec], metadata={"seed": 7})
    lines = text.split("\r\n")
    assert lines[0] == "# seed=7"
    assert lines[1].startswith("edge,tail,head,K,f_lin")
    assert lines[2].split(",")[0] == "0"


def test_fmt_is_locale_free_17_digits():
    assert fmt(1.0 / 3.0) == "0.33333333333333331"
    assert fmt(2.0 / 3.0e14) == "6.6666666666666664e-15"
