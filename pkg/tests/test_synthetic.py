import statistics

import pytest

from tadtw.experiments import MatchConfig, run_cv
from tadtw.scoping import RelativeTimeline
from tadtw.synthetic import SyntheticSpec, default_spec, generate, write_dataset
from tadtw.temporal import DAY
from tadtw.warping import SakoeChibaPercent


def test_generation_is_deterministic():
    a, kb_a = generate(default_spec(), 20, seed=42)
    b, kb_b = generate(default_spec(), 20, seed=42)
    assert a.samples == b.samples
    assert a.events == b.events
    assert a.labels == b.labels
    assert kb_a == kb_b
    c, _ = generate(default_spec(), 20, seed=43)
    assert c.samples != a.samples


def test_degenerate_spec_rejected():
    with pytest.raises(ValueError, match="at least one concept"):
        SyntheticSpec(concepts=())


def test_labels_balanced_and_samples_irregular():
    dataset, _ = generate(default_spec(), 21, seed=1)
    counts = statistics.multimode(dataset.labels.values())
    by_class = {cls: sum(1 for v in dataset.labels.values() if v == cls)
                for cls in set(dataset.labels.values())}
    assert sorted(by_class.values()) == [10, 11]
    gaps = set()
    for entity in dataset.samples:
        times = [s.time for s in dataset.samples[entity]["MARKER-A"]]
        assert times == sorted(times)
        gaps.update(b - a for a, b in zip(times, times[1:]))
    assert len(gaps) > 5  # irregular sampling


def test_class_signal_survives_nearest_centroid_oracle():
    # independent check on the generator: mean MARKER-A level separates the
    # classes before any abstraction machinery runs
    dataset, _ = generate(default_spec(), 40, seed=7)
    means = {e: statistics.fmean(float(s.value) for s in dataset.samples[e]["MARKER-A"])
             for e in dataset.labels}
    centroids = {
        cls: statistics.fmean(means[e] for e in means if dataset.labels[e] == cls)
        for cls in set(dataset.labels.values())
    }
    correct = sum(
        1 for e in means
        if min(centroids, key=lambda c: abs(means[e] - centroids[c])) == dataset.labels[e]
    )
    assert correct / len(means) >= 0.9


def test_overwhelming_noise_destroys_signal():
    dataset, kb = generate(default_spec(noise_sd=500.0), 24, seed=3)
    config = MatchConfig(
        concepts=("MARKER-A",), representations=("S",), interpolation="nearest",
        duration_delegate="MTT", band=SakoeChibaPercent(10), k=1,
        timeline=RelativeTimeline("ENROLL", "start_time", "first", 0, 30 * DAY),
        granularity=DAY)
    result = run_cv(dataset, kb, config, folds=10, seed=0, positive_label="pos")
    assert 0.2 <= result.mean_auc <= 0.8


def test_write_dataset_bytes_stable(tmp_path):
    spec = default_spec()
    for attempt in ("one", "two"):
        dataset, kb = generate(spec, 12, seed=9)
        write_dataset(dataset, kb, spec, tmp_path / attempt)
    for name in ("data.csv", "events.csv", "labels.csv", "synthetic.kb",
                 "experiment.cfg"):
        assert (tmp_path / "one" / name).read_bytes() == \
            (tmp_path / "two" / name).read_bytes()
