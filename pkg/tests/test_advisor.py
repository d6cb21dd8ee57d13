import numpy as np
import pytest

from oracles import scan_recommend
from overlay_advisor.advisor import (
    ModelBundle,
    recommend,
    sweep_candidates,
    train_bundle,
)
from overlay_advisor.capacity import DeviceProfile, builtin_profile
from overlay_advisor.errors import ParseError, ValidationError
from overlay_advisor.forest import ForestConfig
from overlay_advisor.overlay import (
    OverlayConfig,
    default_coefficients,
    generate_synthetic_dataset,
)

SIZES = (1024, 2048, 4096, 8192)
FANOUTS = (4, 8, 16, 32)


@pytest.fixture(scope="module")
def bundle():
    configs = [OverlayConfig(n, f) for n in SIZES for f in FANOUTS for _ in range(3)]
    records = generate_synthetic_dataset(configs, default_coefficients(), 0.05, 1)
    return train_bundle(records, cfg=ForestConfig(n_trees=20, seed=5))


class TestSweep:
    def test_kilo_sizes(self):
        assert [c.num_ste for c in sweep_candidates(1024, 2)] == [1024, 2048, 4096]

    def test_no_doublings(self):
        assert [c.num_ste for c in sweep_candidates(300, 0)] == [300]

    def test_powers_of_two(self):
        sizes = [c.num_ste for c in sweep_candidates(1, 10)]
        assert len(sizes) == 11 and sizes[-1] == 1024

    def test_carries_defaults(self):
        assert all(c.fanout_limit == 8 and c.bus_width == 5000
                   for c in sweep_candidates(16, 3, fanout_limit=8, bus_width=5000))

    def test_overflow(self):
        with pytest.raises(ValidationError, match="overflow"):
            sweep_candidates(1 << 40, 30)


class TestBundle:
    def test_targets_and_range(self, bundle):
        assert bundle.targets == ["luts", "ffs", "mem_bits", "max_fanout"]
        assert bundle.training_range["num_ste"] == (1024.0, 8192.0)
        assert bundle.training_range["fanout_limit"] == (4.0, 32.0)

    def test_round_trip(self, bundle):
        again = ModelBundle.loads(bundle.dumps())
        assert again.dumps() == bundle.dumps()
        probe = [[3000.0, 12.0], [9000.0, 2.0]]
        for t in bundle.targets:
            assert np.array_equal(again.forests[t].predict_batch(probe), bundle.forests[t].predict_batch(probe))

    def test_unknown_target(self):
        with pytest.raises(ValidationError, match="bram"):
            train_bundle(generate_synthetic_dataset([OverlayConfig(8)], default_coefficients(), 0, 0),
                         targets=["bram"])

    def test_bad_json(self):
        with pytest.raises(ParseError):
            ModelBundle.loads("not json")


class TestRecommend:
    def test_all_infeasible(self, bundle):
        tiny = DeviceProfile("tiny", 10, 10, 10)
        rec = recommend(sweep_candidates(1024, 3), bundle, tiny)
        assert rec.best is None and rec.best_entry is None

    def test_single_feasible(self, bundle):
        rec = recommend([OverlayConfig(1024, 4)], bundle, builtin_profile("zcu104"))
        assert rec.best == 0 and rec.entries[0].verdict.fits

    def test_zcu104_sweep_picks_4k(self, bundle):
        rec = recommend(sweep_candidates(1024, 3), bundle, builtin_profile("zcu104"))
        assert rec.best_entry.config.num_ste == 4096
        assert not rec.entries[-1].verdict.fits

    def test_five_candidates_match_scan(self, bundle):
        cands = [OverlayConfig(n, f) for n, f in
                 [(1024, 32), (2048, 8), (4096, 32), (4096, 4), (8192, 4)]]
        p = builtin_profile("zcu104")
        rec = recommend(cands, bundle, p)
        assert rec.best_entry.config == scan_recommend(cands, bundle, p, 100)

    def test_sorted_and_order_stable(self, bundle, rng):
        cands = [OverlayConfig(int(n), int(f)) for n, f in
                 zip(rng.choice(SIZES, 8), rng.choice(FANOUTS, 8))]
        p = builtin_profile("zcu104")
        a = recommend(cands, bundle, p)
        b = recommend(list(reversed(cands)), bundle, p)
        sizes = [e.config.num_ste for e in a.entries]
        assert sizes == sorted(sizes)
        assert a.best_entry.config == b.best_entry.config

    def test_removing_non_best_keeps_best(self, bundle):
        cands = [OverlayConfig(n, f) for n in SIZES for f in (4, 16)]
        p = builtin_profile("zcu104")
        best = recommend(cands, bundle, p).best_entry.config
        for i, c in enumerate(cands):
            if c != best:
                assert recommend(cands[:i] + cands[i + 1:], bundle, p).best_entry.config == best

    def test_same_size_prefers_lower_fanout(self, bundle):
        rec = recommend([OverlayConfig(1024, 16), OverlayConfig(1024, 4)], bundle,
                        builtin_profile("zcu104"))
        assert rec.best_entry.config.fanout_limit == 4

    def test_extrapolation_flagged(self, bundle):
        rec = recommend(sweep_candidates(512, 5), bundle, builtin_profile("zcu104"))
        flags = {e.config.num_ste: e.extrapolation_warning for e in rec.entries}
        assert flags == {512: True, 1024: False, 2048: False, 4096: False, 8192: False, 16384: True}

    def test_missing_gated_target(self):
        recs = generate_synthetic_dataset([OverlayConfig(n) for n in SIZES], default_coefficients(), 0, 0)
        b = train_bundle(recs, targets=["luts"], cfg=ForestConfig(n_trees=2))
        with pytest.raises(ValidationError, match="ffs"):
            recommend([OverlayConfig(1024)], b, builtin_profile("zcu104"))

    def test_empty_candidates(self, bundle):
        with pytest.raises(ValidationError):
            recommend([], bundle, builtin_profile("zcu104"))
