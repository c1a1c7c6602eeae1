"""Long-format study results.

Every study emits a flat list of records keyed by
(study, N, n, kn, design, grid_id, replicate, statistic); grid_id and
replicate are -1 for aggregate rows.  Records sort canonically so that
emitted files are byte-stable across reruns and thread counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

RESULT_COLUMNS = (
    "study",
    "N",
    "n",
    "kn",
    "design",
    "grid_id",
    "replicate",
    "statistic",
    "value",
)


@dataclass(frozen=True)
class StudyRecord:
    study: str
    N: int
    n: int
    kn: int
    design: str
    grid_id: int
    replicate: int
    statistic: str
    value: float

    def key(self):
        return (
            self.study,
            self.N,
            self.design,
            self.statistic,
            self.grid_id,
            self.replicate,
        )


@dataclass
class StudyResult:
    records: list[StudyRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def add(self, **kwargs) -> None:
        self.records.append(StudyRecord(**kwargs))

    def sorted(self) -> "StudyResult":
        return StudyResult(sorted(self.records, key=StudyRecord.key))

    def select(self, **criteria) -> list[StudyRecord]:
        """Records matching all given field equalities."""
        out = self.records
        for name, wanted in criteria.items():
            out = [r for r in out if getattr(r, name) == wanted]
        return out

    def value(self, **criteria) -> float:
        """The single value matching the criteria; raises if not unique."""
        hits = self.select(**criteria)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} records match {criteria}, expected exactly 1")
        return hits[0].value

    def values(self, **criteria) -> list[float]:
        return [r.value for r in self.select(**criteria)]
