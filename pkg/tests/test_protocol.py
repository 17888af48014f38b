import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jndmix.metrics import MetricReport
from jndmix.protocol import (
    DatasetManifest,
    ManifestError,
    Record,
    RepeatError,
    load_manifest,
    make_split,
    repeat_protocol,
    repeat_seeds,
    round_half_away,
    subsample_train,
    write_manifest,
)


def synthetic(n):
    return DatasetManifest(tuple(Record(f"img_{i:05d}.png", float(i % 7)) for i in range(n)), "synthetic")


def test_round_half_away():
    assert [round_half_away(v) for v in (929.6, 8058.4, 232.5, 93.00000000000001, 0.5)] == [930, 8058, 233, 93, 1]


def test_load_manifest_in_file_order(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("path,mos\nc.png,3.5\na.png,1\nb.png,-2.25\n")
    m = load_manifest(p)
    assert m.paths == ["c.png", "a.png", "b.png"]
    assert m.labels == [3.5, 1.0, -2.25]
    assert m.name == "m"


def test_load_manifest_duplicate_path(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("path,mos\na.png,1\nb.png,2\na.png,3\n")
    with pytest.raises(ManifestError, match="a.png"):
        load_manifest(p)


def test_load_manifest_bad_mos_names_row(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("path,mos\na.png,1\nb.png,abc\n")
    with pytest.raises(ManifestError, match="row 3"):
        load_manifest(p)


@pytest.mark.parametrize("text", ["a.png,1\nb.png,2\n", "file,score\na.png,1\nb.png,2\n", ""])
def test_load_manifest_requires_header(tmp_path, text):
    p = tmp_path / "m.csv"
    p.write_text(text)
    with pytest.raises(ManifestError, match="header"):
        load_manifest(p)


def test_load_manifest_rejects_nan_and_short(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("path,mos\na.png,nan\nb.png,1\n")
    with pytest.raises(ManifestError):
        load_manifest(p)
    p.write_text("path,mos\na.png,1\n")
    with pytest.raises(ManifestError):
        load_manifest(p)


def test_write_manifest_round_trip_is_exact(tmp_path):
    m = DatasetManifest((Record("a.png", 0.1 + 0.2), Record("b.png", 3.75)), "x")
    write_manifest(m, tmp_path / "m.csv")
    back = load_manifest(tmp_path / "m.csv")
    assert [v.hex() for v in back.labels] == [v.hex() for v in m.labels]


@pytest.mark.parametrize("n, n_train, n_test", [(1162, 930, 232), (10073, 8058, 2015), (2, 2, 0), (10, 8, 2)])
def test_split_cardinalities(n, n_train, n_test):
    s = make_split(synthetic(n), seed=3)
    assert (len(s.train), len(s.test)) == (n_train, n_test)
    assert sorted(s.train + s.test) == list(range(n))
    assert s.train_fraction == 1.0


def test_split_determinism():
    m = synthetic(100)
    assert make_split(m, 9) == make_split(m, 9)
    assert make_split(m, 9).train != make_split(m, 10).train


def test_split_is_a_permutation_with_spread():
    # every index should land first for some seed: catches an off-by-one Fisher-Yates
    m = synthetic(5)
    firsts = {make_split(m, seed).train[0] for seed in range(200)}
    assert firsts == set(range(5))


@pytest.mark.parametrize("fraction, n_train", [(1.0, 930), (0.5, 465), (0.25, 233), (0.10, 93)])
def test_subsample_livec_sizes(fraction, n_train):
    base = make_split(synthetic(1162), 1)
    sub = subsample_train(base, fraction)
    assert len(sub.train) == n_train
    assert sub.test == base.test
    assert sub.train_fraction == fraction
    assert sub.train == base.train[:n_train]


def test_subsample_identity():
    base = make_split(synthetic(50), 1)
    assert subsample_train(base, 1.0) == base


@pytest.mark.parametrize("fraction", [0.0, -0.5, 1.01, float("nan")])
def test_subsample_rejects_fraction(fraction):
    with pytest.raises(ValueError):
        subsample_train(make_split(synthetic(50), 1), fraction)


def test_subsample_rejects_empty_train():
    with pytest.raises(ValueError, match="leaves none"):
        subsample_train(make_split(synthetic(5), 1), 0.1)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 300), seed=st.integers(0, 2**64 - 1))
def test_partition_and_nesting(n, seed):
    base = make_split(synthetic(n), seed)
    assert not set(base.train) & set(base.test)
    assert set(base.train) | set(base.test) == set(range(n))
    previous = None
    for fraction in (0.1, 0.25, 0.5, 1.0):
        if round_half_away(fraction * len(base.train)) == 0:
            continue
        sub = subsample_train(base, fraction)
        assert set(sub.test) == set(base.test)
        if previous is not None:
            assert set(previous) <= set(sub.train)
        previous = sub.train


def report(srcc, plcc, n=10):
    return MetricReport(srcc, plcc, n)


def test_repeat_one_returns_report_unchanged():
    r = MetricReport(0.3, 0.4, 12, split_seed=99, train_fraction=0.5)
    assert repeat_protocol(synthetic(10), 1, 1.0, lambda s: r) is r


def test_repeat_constant_eval():
    out = repeat_protocol(synthetic(10), 10, 0.5, lambda s: report(0.5, 0.6), base_seed=4)
    assert (out.srcc, out.plcc) == (0.5, 0.6)
    assert (out.split_seed, out.train_fraction) == (4, 0.5)


def test_repeat_mean_of_two():
    values = iter([report(0.4, 0.1), report(0.6, 0.3)])
    out = repeat_protocol(synthetic(10), 2, 1.0, lambda s: next(values))
    assert out.srcc == 0.5


def test_repeat_uses_derived_seeds_and_fraction():
    seen = []

    def ev(split):
        seen.append(split)
        return report(0.0, 0.0)

    m = synthetic(40)
    repeat_protocol(m, 3, 0.5, ev, base_seed=77)
    assert [s.seed for s in seen] == repeat_seeds(77, 3)
    assert all(len(s.train) == 16 and len(s.test) == 8 for s in seen)
    assert seen[0] == subsample_train(make_split(m, repeat_seeds(77, 3)[0]), 0.5)


def test_repeat_annotates_failures():
    calls = []

    def ev(split):
        calls.append(split)
        if len(calls) == 3:
            raise ValueError("zero variance")
        return report(0.1, 0.1)

    with pytest.raises(RepeatError, match="repeat 2") as info:
        repeat_protocol(synthetic(10), 5, 1.0, ev)
    assert info.value.repeat == 2
    assert isinstance(info.value.__cause__, ValueError)


def test_repeat_rejects_zero_repeats():
    with pytest.raises(ValueError):
        repeat_protocol(synthetic(10), 0, 1.0, lambda s: report(0, 0))
