from __future__ import annotations

import numpy as np
import pytest

from conftest import make_numeric_dataset
from ppmd.classifiers import ClassifierConfig, predict
from ppmd.errors import SchemaError, ServiceUnavailableError
from ppmd.partition import PartitionSpec
from ppmd.pipeline import CLEAN, derive_seed, evaluate_dataset, run_cell
from ppmd.privacy import NoiseConfig
from ppmd.protocol import (
    RESPONSE,
    UPLOAD,
    CspState,
    Message,
    ProtocolRun,
    TraceLog,
    make_owners,
    owner_query,
    replay,
    run_protocol,
    scan_trace,
)

CLF = ClassifierConfig(rf_trees=10, ann_epochs=20)
SPEC = PartitionSpec(mode="column", sensitive_columns=("f0", "f1"))


def protocol_run(ds, n_owners, placement="ppmd", noise=None, seed=0, variant="svm"):
    owners = make_owners(
        ds, n_owners, SPEC, noise or NoiseConfig(), placement=placement, master_seed=seed
    )
    run = run_protocol(owners, variant, CLF, master_seed=seed)
    return run


class TestProtocolFlow:
    def test_single_owner_no_noise_collapses_to_pipeline(self):
        ds = make_numeric_dataset(60, 4, seed=1)
        run = protocol_run(ds, 1, noise=NoiseConfig(enabled=False), seed=3)
        cell, _ = run_cell(
            ds, CLEAN, None, NoiseConfig(enabled=False), "svm", CLF, seed=3
        )
        assert run.outcome.report.to_dict() == cell.report.to_dict()
        assert np.array_equal(run.outcome.confusion_matrix, cell.confusion_matrix)

    def test_three_owners_pool_all_rows(self):
        ds = make_numeric_dataset(303, 4, seed=2)
        run = protocol_run(ds, 3, seed=1)
        uploads = [m for m in run.trace if m.kind == UPLOAD]
        assert len(uploads) == 3
        assert sorted(len(m.payload["dataset"]["y"]) for m in uploads) == [101, 101, 101]
        assert run.csp.pooled().n_rows == 303

    def test_upload_payloads_contain_no_noise_log(self):
        ds = make_numeric_dataset(40, 3, seed=3)
        run = protocol_run(ds, 2)
        for m in run.trace:
            assert set(m.payload) == {"dataset"}
            assert set(m.payload["dataset"]) == {"name", "schema", "X", "y"}

    def test_leakage_scan_clean_run(self):
        ds = make_numeric_dataset(90, 4, seed=4)
        run = protocol_run(ds, 3, seed=5)
        report = scan_trace(run.trace, run.owners)
        assert report.ok, report.violations

    def test_leakage_scan_catches_raw_upload(self):
        from ppmd.dataset import dataset_to_dict

        ds = make_numeric_dataset(50, 4, seed=6)
        owners = make_owners(ds, 2, SPEC, NoiseConfig(), master_seed=0)
        run = run_protocol(owners, "svm", CLF, master_seed=0)
        # tamper: replace owner0's upload with the raw (un-noised) dataset
        tampered = TraceLog(meta=run.trace.meta)
        for m in run.trace:
            if m.kind == UPLOAD and m.sender == "owner0":
                m = Message(m.kind, m.sender, m.receiver, m.seq,
                            {"dataset": dataset_to_dict(run.owner("owner0").dataset)})
            tampered.append(m)
        report = scan_trace(tampered, run.owners)
        assert not report.ok
        assert any("owner0" in v for v in report.violations)

    def test_schema_incompatibility_rejected(self):
        a = make_numeric_dataset(20, 3, seed=7)
        b = make_numeric_dataset(20, 4, seed=8)
        owners = make_owners(a, 1, SPEC, NoiseConfig()) + make_owners(b, 1, SPEC, NoiseConfig())
        with pytest.raises(SchemaError):
            run_protocol(owners, "svm", CLF)

    def test_sequence_numbers_increase_per_sender(self):
        ds = make_numeric_dataset(60, 3, seed=9)
        run = protocol_run(ds, 3)
        owner_query(run, "owner0", run.csp.pooled().X[:5])
        owner_query(run, "owner0", run.csp.pooled().X[:2])
        seen: dict[str, int] = {}
        for m in run.trace:
            assert m.seq > seen.get(m.sender, 0)
            seen[m.sender] = m.seq


class TestQueries:
    def test_query_equals_direct_prediction(self):
        ds = make_numeric_dataset(80, 4, seed=10)
        run = protocol_run(ds, 2, seed=2)
        rows = make_numeric_dataset(12, 4, seed=11).X
        labels = owner_query(run, "owner1", rows)
        assert np.array_equal(labels, predict(run.csp.model, rows))

    def test_empty_query(self):
        ds = make_numeric_dataset(40, 3, seed=12)
        run = protocol_run(ds, 1)
        assert owner_query(run, "owner0", np.empty((0, 3))).tolist() == []

    def test_response_routed_only_to_querying_owner(self):
        ds = make_numeric_dataset(60, 3, seed=13)
        run = protocol_run(ds, 3)
        owner_query(run, "owner1", ds.X[:4])
        assert run.owner("owner0").inbox == []
        assert run.owner("owner2").inbox == []
        inbox = run.owner("owner1").inbox
        assert len(inbox) == 1 and inbox[0].kind == RESPONSE
        responses = [m for m in run.trace if m.kind == RESPONSE]
        assert all(m.receiver == "owner1" for m in responses)

    def test_query_before_training_is_unavailable(self):
        ds = make_numeric_dataset(30, 3, seed=14)
        owners = make_owners(ds, 1, SPEC, NoiseConfig())
        run = ProtocolRun(trace=TraceLog(meta={}), csp=CspState(), owners=owners)
        with pytest.raises(ServiceUnavailableError):
            owner_query(run, "owner0", ds.X[:2])


class TestReplay:
    def test_replay_reconstructs_identical_state(self):
        ds = make_numeric_dataset(90, 4, seed=15)
        run = protocol_run(ds, 3, seed=4)
        rows = ds.X[:6]
        owner_query(run, "owner2", rows)

        text = run.trace.to_jsonl()
        restored = replay(TraceLog.from_jsonl(text))
        assert sorted(restored.received) == sorted(run.csp.received)
        for owner_id in restored.received:
            assert np.array_equal(restored.received[owner_id].X, run.csp.received[owner_id].X)
        probe = make_numeric_dataset(20, 4, seed=16).X
        assert np.array_equal(predict(restored.model, probe), predict(run.csp.model, probe))
        assert restored.query_log == run.csp.query_log

    def test_trace_serialization_round_trip(self):
        ds = make_numeric_dataset(40, 3, seed=17)
        run = protocol_run(ds, 2)
        text = run.trace.to_jsonl()
        clone = TraceLog.from_jsonl(text)
        assert clone.meta == run.trace.meta
        assert clone.messages == run.trace.messages
        assert clone.to_jsonl() == text

    def test_pool_equivalence_with_direct_pipeline(self):
        ds = make_numeric_dataset(120, 4, seed=18)
        run = protocol_run(ds, 3, seed=6, variant="rf")
        pooled = run.csp.pooled()
        direct = evaluate_dataset(
            pooled, "rf", CLF.with_seed(derive_seed(6, "clf", "rf")),
            split_seed=derive_seed(6, "split"),
        )
        probe = make_numeric_dataset(25, 4, seed=19).X
        assert np.array_equal(predict(direct.model, probe), predict(run.csp.model, probe))
        assert direct.report.to_dict() == run.outcome.report.to_dict()


def test_csp_storage_enforces_payload_typing():
    csp = CspState()
    bogus = Message(kind="ClassifyQuery", sender="owner0", receiver="csp",
                    seq=1, payload={"rows": [[1.0]]})
    with pytest.raises(SchemaError, match="sanitized-dataset"):
        csp.store_upload(bogus)
    sneaky = Message(kind=UPLOAD, sender="owner0", receiver="csp",
                     seq=2, payload={"dataset": {}, "noise_log": []})
    with pytest.raises(SchemaError):
        csp.store_upload(sneaky)


def test_schedule_seed_changes_upload_order_only():
    ds = make_numeric_dataset(90, 3, seed=20)
    runs = []
    for schedule in (0, 1):
        owners = make_owners(ds, 3, SPEC, NoiseConfig(), master_seed=1)
        runs.append(run_protocol(owners, "nb", CLF, master_seed=1, schedule_seed=schedule))
    orders = [[m.sender for m in r.trace if m.kind == UPLOAD] for r in runs]
    assert sorted(orders[0]) == sorted(orders[1]) == ["owner0", "owner1", "owner2"]
    assert orders[0] != orders[1]  # seeds 0 and 1 permute differently here


def test_row_mode_partition_scan():
    ds = make_numeric_dataset(60, 3, seed=21)
    spec = PartitionSpec(mode="row", k=3, seed=2)
    owners = make_owners(ds, 2, spec, NoiseConfig(), master_seed=4)
    run = run_protocol(owners, "nb", CLF, master_seed=4)
    report = scan_trace(run.trace, run.owners)
    assert report.ok, report.violations
    # counterpart relation holds per sampled row
    uploads = {m.sender: m for m in run.trace if m.kind == UPLOAD}
    for owner in run.owners:
        san = owner.sanitized
        uploaded = np.asarray(uploads[owner.owner_id].payload["dataset"]["X"])
        rows = list(san.partition.sensitive_index)
        assert np.array_equal(uploaded[rows], san.partition.sensitive + san.noise_log.noise)
