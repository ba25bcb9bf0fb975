import numpy as np
import pytest

from gradclust.model import ClusterState, Community, Dataset, Partition, RunConfig, centroid


def make_dataset(rows, ids=None, truth=None):
    rows = np.asarray(rows, dtype=float)
    if ids is None:
        ids = tuple(str(i) for i in range(len(rows)))
    return Dataset(ids, rows, truth)


class TestDataset:
    def test_basic_construction(self):
        ds = make_dataset([[1.0, 2.0], [3.0, 4.0]])
        assert len(ds) == 2
        assert ds.dim == 2
        assert ds.ground_truth is None

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            make_dataset([[1.0, np.nan]])

    def test_rejects_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            make_dataset([[np.inf, 0.0]])

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError, match="unique"):
            make_dataset([[1.0], [2.0]], ids=("a", "a"))

    def test_rejects_id_count_mismatch(self):
        with pytest.raises(ValueError):
            make_dataset([[1.0], [2.0]], ids=("a",))

    def test_rejects_bad_truth_shape(self):
        with pytest.raises(ValueError):
            make_dataset([[1.0], [2.0]], truth=np.array([0]))

    def test_embeddings_are_read_only(self):
        ds = make_dataset([[1.0, 2.0]])
        with pytest.raises(ValueError):
            ds.embeddings[0, 0] = 5.0

    def test_with_embeddings_returns_new_dataset(self):
        ds = make_dataset([[1.0, 2.0]])
        ds2 = ds.with_embeddings(np.array([[3.0, 4.0]]))
        assert ds.embeddings[0, 0] == 1.0
        assert ds2.embeddings[0, 0] == 3.0
        assert ds2.ids == ds.ids


class TestCommunity:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Community(0, ())

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError, match="increasing"):
            Community(0, (2, 1))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="increasing"):
            Community(0, (1, 1))

    def test_from_members_sorts_and_dedups(self):
        c = Community.from_members(3, [5, 1, 5, 2])
        assert c.members == (1, 2, 5)
        assert len(c) == 3
        assert 5 in c and 4 not in c


class TestPartition:
    def test_rejects_overlap(self):
        with pytest.raises(ValueError, match="overlap"):
            Partition((Community(0, (0, 1)), Community(1, (1, 2))), (0, 1, 2))

    def test_rejects_coverage_gap(self):
        with pytest.raises(ValueError, match="cover"):
            Partition((Community(0, (0,)),), (0, 1))

    def test_from_communities_infers_nodes(self):
        p = Partition.from_communities([Community(0, (0, 2)), Community(1, (1,))])
        assert p.nodes == (0, 1, 2)
        assert sorted(p.sizes()) == [1, 2]


class TestClusterState:
    def test_check_passes_on_valid_state(self):
        state = ClusterState(
            k=2,
            main_communities={0: Community(0, (0,)), 1: Community(1, (1,))},
            unlabeled={2, 3},
        )
        state.check(4)

    def test_check_detects_overlap_with_pool(self):
        state = ClusterState(
            k=1, main_communities={0: Community(0, (0, 1))}, unlabeled={1}
        )
        with pytest.raises(ValueError):
            state.check(2)

    def test_check_detects_coverage_gap(self):
        state = ClusterState(k=1, main_communities={0: Community(0, (0,))}, unlabeled=set())
        with pytest.raises(ValueError):
            state.check(2)

    def test_label_of(self):
        state = ClusterState(
            k=2,
            main_communities={0: Community(0, (0, 2)), 1: Community(1, (1,))},
            unlabeled={3},
        )
        assert state.label_of(4).tolist() == [0, 1, 0, -1]


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig(k=3)
        assert cfg.similarity_threshold == 0.5
        assert cfg.confidence == 0.9
        assert cfg.learning_rate == pytest.approx(1e-4)
        assert cfg.batch_size == 64
        assert cfg.epochs_per_iteration == 100
        assert cfg.distance_sample_cap == 256

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k": 0},
            {"k": 2, "similarity_threshold": 1.0},
            {"k": 2, "similarity_threshold": -1.5},
            {"k": 2, "confidence": 0.0},
            {"k": 2, "confidence": 1.0},
            {"k": 2, "tau": 0.0},
            {"k": 2, "learning_rate": -1.0},
            {"k": 2, "batch_size": 0},
            {"k": 2, "epochs_per_iteration": -1},
            {"k": 2, "seed": -1},
            {"k": 2, "distance_sample_cap": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            RunConfig(**kwargs)


class TestCentroid:
    def test_single_member_identity(self):
        ds = make_dataset([[1.0, 2.0]])
        assert centroid(Community(0, (0,)), ds).tolist() == [1.0, 2.0]

    def test_symmetry(self):
        ds = make_dataset([[0.0, 0.0], [2.0, 2.0]])
        assert centroid(Community(0, (0, 1)), ds).tolist() == [1.0, 1.0]

    def test_three_rows(self):
        ds = make_dataset([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        assert centroid(Community(0, (0, 1, 2)), ds).tolist() == [1.0, 1.0]

    def test_out_of_range_member(self):
        ds = make_dataset([[1.0, 2.0]])
        with pytest.raises(IndexError):
            centroid(Community(0, (5,)), ds)
