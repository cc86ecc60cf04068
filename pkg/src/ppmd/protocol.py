"""In-process simulation of the owners / service-provider protocol.

Multiple data owners each partition their private table, add noise to the
sensitive part, and upload only the sanitized result. A single semi-trusted
service provider pools the uploads row-wise in arrival order, trains the
classification model on a 9/10 split of the pool, and answers label queries,
routing each response only to the owner who asked.

Transport is a deterministic in-process message queue: every message is
appended to a replayable trace together with the provider-side training
parameters, so a trace re-run reconstructs the identical final state. The
trace also supports leakage auditing: raw sensitive values stay owner-side,
and every provider-visible counterpart must differ from the raw cell by
exactly the logged noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .classifiers import ClassifierConfig, TrainedModel, predict
from .dataset import Dataset, as_fraction, dataset_from_dict, dataset_to_dict
from .errors import SchemaError, ServiceUnavailableError
from .partition import COLUMN, PartitionSpec, partition, partition_columns
from .pipeline import (
    ALL,
    CLEAN,
    PPMD,
    EvaluationOutcome,
    derive_seed,
    evaluate_dataset,
)
from .privacy import NoiseConfig, SanitizedDataset, sanitize_partition

CSP_ID = "csp"

UPLOAD = "UploadSanitized"
QUERY = "ClassifyQuery"
RESPONSE = "ClassifyResponse"


@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    receiver: str
    seq: int
    payload: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sender": self.sender,
            "receiver": self.receiver,
            "seq": self.seq,
            "payload": self.payload,
        }

    @staticmethod
    def from_dict(d: dict) -> "Message":
        return Message(d["kind"], d["sender"], d["receiver"], d["seq"], d["payload"])


@dataclass
class TraceLog:
    """Append-only record of every message plus the provider-side training
    parameters needed to replay the run."""

    meta: dict
    messages: list[Message] = field(default_factory=list)

    def append(self, msg: Message) -> None:
        self.messages.append(msg)

    def __iter__(self):
        return iter(self.messages)

    def __len__(self):
        return len(self.messages)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"meta": self.meta}, sort_keys=True)]
        lines += [json.dumps(m.to_dict(), sort_keys=True) for m in self.messages]
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @staticmethod
    def from_jsonl(text: str) -> "TraceLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        meta = json.loads(lines[0])["meta"]
        return TraceLog(meta=meta, messages=[Message.from_dict(json.loads(ln)) for ln in lines[1:]])

    @staticmethod
    def load(path) -> "TraceLog":
        return TraceLog.from_jsonl(Path(path).read_text())


@dataclass
class OwnerState:
    """One data owner: private dataset, sanitization settings, and the
    owner-side noise log that never leaves this object."""

    owner_id: str
    dataset: Dataset
    partition_spec: PartitionSpec | None
    noise_config: NoiseConfig
    placement: str = PPMD
    sanitized: SanitizedDataset | None = None
    inbox: list[Message] = field(default_factory=list)

    def prepare_upload(self) -> Dataset:
        """Sanitize the private dataset; returns the upload-safe part only."""
        if self.placement == CLEAN:
            self.sanitized = None
            return self.dataset
        if self.placement == PPMD:
            if self.partition_spec is None:
                raise SchemaError(f"owner {self.owner_id} has no partition spec")
            pd = partition(self.dataset, self.partition_spec)
        elif self.placement == ALL:
            pd = partition_columns(self.dataset, self.dataset.feature_names)
        else:
            raise SchemaError(f"unknown placement {self.placement!r}")
        self.sanitized = sanitize_partition(pd, self.noise_config)
        return self.sanitized.data


@dataclass
class CspState:
    """Semi-trusted provider: stores sanitized uploads keyed by owner (in
    arrival order), the trained model, and a query log."""

    received: dict[str, Dataset] = field(default_factory=dict)
    model: TrainedModel | None = None
    query_log: list[dict] = field(default_factory=list)

    def store_upload(self, msg: Message) -> None:
        if msg.kind != UPLOAD or set(msg.payload) != {"dataset"}:
            raise SchemaError("provider storage accepts only sanitized-dataset payloads")
        self.received[msg.sender] = dataset_from_dict(msg.payload["dataset"])

    def pooled(self) -> Dataset:
        parts = list(self.received.values())
        if not parts:
            raise SchemaError("no uploads received")
        first = parts[0]
        for other in parts[1:]:
            if other.schema != first.schema:
                raise SchemaError("owners uploaded incompatible schemas")
        return Dataset(
            name="pooled",
            schema=first.schema,
            X=np.concatenate([p.X for p in parts], axis=0),
            y=np.concatenate([p.y for p in parts], axis=0),
        )


@dataclass
class ProtocolRun:
    trace: TraceLog
    csp: CspState
    owners: list[OwnerState]
    outcome: EvaluationOutcome | None = None
    _seq: dict[str, int] = field(default_factory=dict)

    def next_seq(self, sender: str) -> int:
        self._seq[sender] = self._seq.get(sender, 0) + 1
        return self._seq[sender]

    def owner(self, owner_id: str) -> OwnerState:
        for o in self.owners:
            if o.owner_id == owner_id:
                return o
        raise SchemaError(f"unknown owner {owner_id!r}")


def make_owners(
    ds: Dataset,
    n_owners: int,
    partition_spec: PartitionSpec | None,
    noise_config: NoiseConfig,
    placement: str = PPMD,
    master_seed: int = 0,
) -> list[OwnerState]:
    """Shard a dataset row-wise into n contiguous owner datasets.

    Owner 0 reuses the pipeline noise stream so a single-owner protocol run
    collapses to the plain pipeline exactly; later owners get independent
    derived streams.
    """
    if n_owners < 1:
        raise SchemaError(f"need at least one owner, got {n_owners}")
    if n_owners > ds.n_rows:
        raise SchemaError(f"cannot shard {ds.n_rows} rows across {n_owners} owners")
    shards = np.array_split(np.arange(ds.n_rows), n_owners)
    owners = []
    for i, rows in enumerate(shards):
        shard = Dataset(
            name=f"{ds.name}/owner{i}",
            schema=ds.schema,
            X=ds.X[rows].copy(),
            y=ds.y[rows].copy(),
        )
        tags = ("noise",) if i == 0 else ("noise", i)
        owners.append(
            OwnerState(
                owner_id=f"owner{i}",
                dataset=shard,
                partition_spec=partition_spec,
                noise_config=replace(noise_config, seed=derive_seed(master_seed, *tags)),
                placement=placement,
            )
        )
    return owners


def run_protocol(
    owners: list[OwnerState],
    variant: str,
    clf_config: ClassifierConfig | None = None,
    fraction=Fraction(9, 10),
    master_seed: int = 0,
    schedule_seed: int = 0,
    stratified: bool = False,
    averaging: str | None = None,
    positive_class: int = 1,
) -> ProtocolRun:
    """Drive the full upload/train flow under a deterministic schedule.

    Owners sanitize and upload in an order fixed by ``schedule_seed``; the
    provider pools the uploads in arrival order, splits 9/10, trains the
    model, and scores the held-out rows.
    """
    if not owners:
        raise SchemaError("need at least one owner")
    first = owners[0].dataset.schema
    for o in owners[1:]:
        if o.dataset.schema != first:
            raise SchemaError(
                f"owner {o.owner_id} schema is incompatible with {owners[0].owner_id}"
            )
    clf_config = clf_config or ClassifierConfig()
    meta = {
        "variant": variant,
        "clf_config": clf_config.to_dict(),
        "fraction": str(as_fraction(fraction)),
        "master_seed": master_seed,
        "schedule_seed": schedule_seed,
        "stratified": stratified,
        "averaging": averaging,
        "positive_class": positive_class,
        "owners": [o.owner_id for o in owners],
    }
    run = ProtocolRun(trace=TraceLog(meta=meta), csp=CspState(), owners=list(owners))
    order = np.random.default_rng(schedule_seed).permutation(len(owners))
    for i in order:
        owner = owners[int(i)]
        upload = owner.prepare_upload()
        msg = Message(
            kind=UPLOAD,
            sender=owner.owner_id,
            receiver=CSP_ID,
            seq=run.next_seq(owner.owner_id),
            payload={"dataset": dataset_to_dict(upload)},
        )
        run.trace.append(msg)
        run.csp.store_upload(msg)

    run.outcome = _train_csp(
        run.csp, variant, clf_config, fraction, master_seed, stratified,
        averaging, positive_class,
    )
    return run


def _train_csp(
    csp: CspState, variant, clf_config, fraction, master_seed, stratified,
    averaging, positive_class,
) -> EvaluationOutcome:
    pooled = csp.pooled()
    outcome = evaluate_dataset(
        pooled,
        variant,
        clf_config.with_seed(derive_seed(master_seed, "clf", variant)),
        fraction=fraction,
        split_seed=derive_seed(master_seed, "split"),
        stratified=stratified,
        averaging=averaging,
        positive_class=positive_class,
    )
    csp.model = outcome.model
    return outcome


def owner_query(run: ProtocolRun, owner_id: str, rows) -> np.ndarray:
    """Submit rows for classification; the response lands only in the
    querying owner's inbox."""
    owner = run.owner(owner_id)
    rows = np.asarray(rows, dtype=np.float64)
    query = Message(
        kind=QUERY,
        sender=owner_id,
        receiver=CSP_ID,
        seq=run.next_seq(owner_id),
        payload={"rows": [[float(v) for v in row] for row in rows]},
    )
    run.trace.append(query)
    if run.csp.model is None:
        raise ServiceUnavailableError("classification model is not trained yet")
    labels = predict(run.csp.model, rows) if len(rows) else np.empty(0, dtype=np.int64)
    run.csp.query_log.append({"owner": owner_id, "n_rows": int(len(rows))})
    response = Message(
        kind=RESPONSE,
        sender=CSP_ID,
        receiver=owner_id,
        seq=run.next_seq(CSP_ID),
        payload={"labels": [int(v) for v in labels]},
    )
    run.trace.append(response)
    owner.inbox.append(response)
    return labels


def replay(trace: TraceLog) -> CspState:
    """Rebuild the provider state by re-applying a trace in order. Upload
    payloads are stored verbatim; the model is retrained with the recorded
    parameters, so a replayed state matches the original exactly."""
    csp = CspState()
    meta = trace.meta
    for msg in trace:
        if msg.kind == UPLOAD:
            csp.store_upload(msg)
    _train_csp(
        csp,
        meta["variant"],
        ClassifierConfig.from_dict(meta["clf_config"]),
        Fraction(meta["fraction"]),
        meta["master_seed"],
        meta["stratified"],
        meta["averaging"],
        meta["positive_class"],
    )
    for msg in trace:
        if msg.kind == QUERY:
            rows = np.asarray(msg.payload["rows"], dtype=np.float64)
            csp.query_log.append({"owner": msg.sender, "n_rows": int(len(rows))})
    return csp


@dataclass
class LeakageReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def _csp_bound_matrices(trace: TraceLog) -> list[tuple[str, np.ndarray]]:
    """Every matrix of values visible to the provider, tagged by origin."""
    out = []
    for msg in trace:
        if msg.receiver != CSP_ID:
            continue
        if msg.kind == UPLOAD:
            d = msg.payload["dataset"]
            out.append((f"upload:{msg.sender}", np.asarray(d["X"], dtype=np.float64)))
        elif msg.kind == QUERY:
            rows = np.asarray(msg.payload["rows"], dtype=np.float64)
            if rows.size:
                out.append((f"query:{msg.sender}", rows))
    return out


def scan_trace(trace: TraceLog, owners: list[OwnerState]) -> LeakageReport:
    """Leakage audit of everything the provider could see.

    For every owner with noise applied: (1) the uploaded counterpart of each
    sensitive cell must equal raw + logged noise and differ from raw wherever
    the noise is non-zero; (2) no raw sensitive row vector may appear in any
    provider-bound matrix at the sensitive positions.
    """
    violations: list[str] = []
    payloads = _csp_bound_matrices(trace)
    uploads = {m.sender: m for m in trace if m.kind == UPLOAD}

    for owner in owners:
        san = owner.sanitized
        if san is None:
            continue
        raw = san.partition.sensitive
        noise = san.noise_log.noise
        msg = uploads.get(owner.owner_id)
        if msg is None:
            violations.append(f"{owner.owner_id}: no upload found in trace")
            continue
        uploaded = np.asarray(msg.payload["dataset"]["X"], dtype=np.float64)
        if san.partition.mode == COLUMN:
            counterpart = uploaded[:, list(san.partition.sensitive_index)]
        else:
            counterpart = uploaded[list(san.partition.sensitive_index), :]
        if counterpart.shape != raw.shape:
            violations.append(f"{owner.owner_id}: uploaded sensitive block has wrong shape")
            continue
        if not np.array_equal(counterpart, raw + noise):
            violations.append(
                f"{owner.owner_id}: uploaded sensitive cells are not raw + logged noise"
            )
        exposed = (noise != 0) & (counterpart == raw)
        if exposed.any():
            violations.append(
                f"{owner.owner_id}: {int(exposed.sum())} noised cells uploaded at raw value"
            )

        noisy_rows = np.flatnonzero((noise != 0).any(axis=1))
        for origin, matrix in payloads:
            if san.partition.mode == COLUMN:
                if matrix.shape[1] < max(san.partition.sensitive_index) + 1:
                    continue
                view = matrix[:, list(san.partition.sensitive_index)]
            else:
                if matrix.shape[1] != raw.shape[1]:
                    continue
                view = matrix
            for r in noisy_rows:
                if (view == raw[r]).all(axis=1).any():
                    violations.append(
                        f"{owner.owner_id}: raw sensitive row {int(r)} visible in {origin}"
                    )
    return LeakageReport(violations=violations)
