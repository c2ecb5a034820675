import struct

import numpy as np
import pytest

from hierfl import datasets
from hierfl.errors import ConfigError, FormatError


def write_idx_pair(tmp_path, images, labels, image_magic=0x803, label_magic=0x801,
                   label_count=None):
    n, rows, cols = images.shape
    img_path = tmp_path / "images.idx"
    lbl_path = tmp_path / "labels.idx"
    img_path.write_bytes(
        struct.pack(">IIII", image_magic, n, rows, cols) + images.tobytes()
    )
    lbl_path.write_bytes(
        struct.pack(">II", label_magic, n if label_count is None else label_count)
        + labels.tobytes()
    )
    return img_path, lbl_path


class TestSynthetic:
    def test_shape_and_range(self, small_dataset):
        assert len(small_dataset) == 240
        assert small_dataset.dim == 5
        assert small_dataset.features.min() >= 0.0
        assert small_dataset.features.max() <= 1.0
        assert np.array_equal(np.unique(small_dataset.labels), np.arange(4))

    def test_balanced_classes(self, small_dataset):
        assert np.array_equal(np.bincount(small_dataset.labels), [60] * 4)

    def test_deterministic(self):
        a = datasets.generate_synthetic(3, 4, 10, seed=7)
        b = datasets.generate_synthetic(3, 4, 10, seed=7)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_seed_sensitivity(self):
        a = datasets.generate_synthetic(3, 4, 10, seed=7)
        b = datasets.generate_synthetic(3, 4, 10, seed=8)
        assert not np.array_equal(a.features, b.features)

    def test_clusters_separated(self, small_dataset):
        # class means should be farther apart than the within-class spread
        means = np.stack([
            small_dataset.features[small_dataset.labels == c].mean(axis=0)
            for c in range(4)
        ])
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.linalg.norm(means[i] - means[j]) > 0.1

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            datasets.generate_synthetic(0, 4, 10, seed=1)


class TestDataset:
    def test_subset(self, small_dataset):
        sub = small_dataset.subset(np.array([0, 5, 7]))
        assert len(sub) == 3
        assert np.array_equal(sub.labels, small_dataset.labels[[0, 5, 7]])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            datasets.Dataset(np.zeros((3, 2)), np.zeros(2, dtype=np.int64), 2)

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            datasets.Dataset(np.zeros((2, 2)), np.array([0, 5]), 2)


class TestTopology:
    def test_clients_per_edge(self, topology_8x2):
        assert topology_8x2.clients_per_edge == 4
        assert np.array_equal(
            topology_8x2.default_edge_assignment(), [0, 0, 0, 0, 1, 1, 1, 1]
        )

    def test_divisibility_required(self):
        with pytest.raises(ConfigError):
            datasets.Topology(num_clients=7, num_edges=2)

    def test_positive_required(self):
        with pytest.raises(ConfigError):
            datasets.Topology(num_clients=0, num_edges=1)


class TestIdxLoader:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        images = rng.integers(0, 256, size=(5, 2, 3), dtype=np.uint8)
        labels = rng.integers(0, 10, size=5, dtype=np.uint8)
        ip, lp = write_idx_pair(tmp_path, images, labels)
        ds = datasets.load_mnist_idx(ip, lp)
        assert len(ds) == 5
        assert ds.dim == 6
        assert np.array_equal(ds.labels, labels.astype(np.int64))
        assert np.allclose(ds.features, images.reshape(5, 6) / 255.0)

    def test_limit(self, tmp_path):
        images = np.zeros((4, 1, 1), dtype=np.uint8)
        labels = np.zeros(4, dtype=np.uint8)
        ip, lp = write_idx_pair(tmp_path, images, labels)
        assert len(datasets.load_mnist_idx(ip, lp, limit=2)) == 2

    def test_bad_image_magic(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 1, 1), dtype=np.uint8),
                                np.zeros(1, dtype=np.uint8), image_magic=0x123)
        with pytest.raises(FormatError, match="magic"):
            datasets.load_mnist_idx(ip, lp)

    def test_bad_label_magic(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 1, 1), dtype=np.uint8),
                                np.zeros(1, dtype=np.uint8), label_magic=0x999)
        with pytest.raises(FormatError, match="magic"):
            datasets.load_mnist_idx(ip, lp)

    def test_count_mismatch(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((2, 1, 1), dtype=np.uint8),
                                np.zeros(2, dtype=np.uint8), label_count=3)
        with pytest.raises(FormatError, match="labels"):
            datasets.load_mnist_idx(ip, lp)

    def test_truncated_images(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((2, 2, 2), dtype=np.uint8),
                                np.zeros(2, dtype=np.uint8))
        ip.write_bytes(ip.read_bytes()[:-3])
        with pytest.raises(FormatError, match="truncated"):
            datasets.load_mnist_idx(ip, lp)


def partition_invariants(ds, part, topo):
    assert part.num_clients == topo.num_clients
    sizes = part.shard_sizes()
    assert np.all(sizes == sizes[0]) and sizes[0] > 0
    allidx = part.assigned_indices()
    assert len(np.unique(allidx)) == len(allidx)  # disjoint
    assert allidx.min() >= 0 and allidx.max() < len(ds)
    counts = np.bincount(part.edge_assignment, minlength=topo.num_edges)
    assert np.all(counts == topo.clients_per_edge)


class TestPartitionSchemes:
    @pytest.mark.parametrize("scheme", datasets.SCHEMES)
    def test_invariants(self, scheme, small_dataset, topology_8x2):
        part = datasets.partition(small_dataset, topology_8x2, scheme, seed=5)
        partition_invariants(small_dataset, part, topology_8x2)

    @pytest.mark.parametrize("scheme", datasets.SCHEMES)
    def test_deterministic(self, scheme, small_dataset, topology_8x2):
        a = datasets.partition(small_dataset, topology_8x2, scheme, seed=5)
        b = datasets.partition(small_dataset, topology_8x2, scheme, seed=5)
        assert all(
            np.array_equal(x, y) for x, y in zip(a.client_shards, b.client_shards)
        )
        assert np.array_equal(a.edge_assignment, b.edge_assignment)

    def test_iid_uses_all_divisible_samples(self, small_dataset, topology_8x2):
        part = datasets.partition(small_dataset, topology_8x2, "iid", seed=5)
        assert part.shard_sizes().sum() == 240

    def test_iid_clients_see_all_classes(self, small_dataset, topology_8x2):
        part = datasets.partition(small_dataset, topology_8x2, "iid", seed=5)
        for shard in part.client_shards:
            assert len(np.unique(small_dataset.labels[shard])) == 4

    def test_simple_niid_at_most_two_runs(self, small_dataset, topology_8x2):
        # each client holds exactly 2 label-sorted shards, hence <= 2 classes
        # unless the two shards straddle a class boundary (<= 4 total)
        part = datasets.partition(small_dataset, topology_8x2, "simple_niid", seed=5)
        for shard in part.client_shards:
            assert len(np.unique(small_dataset.labels[shard])) <= 4

    def test_edge_iid_one_class_per_client(self, small_dataset):
        topo = datasets.Topology(num_clients=8, num_edges=2)  # P=4=C
        part = datasets.partition(small_dataset, topo, "edge_iid", seed=5)
        for shard in part.client_shards:
            assert len(np.unique(small_dataset.labels[shard])) == 1
        for e in range(2):
            labels = np.concatenate([
                small_dataset.labels[part.client_shards[c]]
                for c in part.clients_of_edge(e)
            ])
            assert len(np.unique(labels)) == 4  # edges cover all classes

    def test_edge_iid_needs_matching_width(self, small_dataset):
        topo = datasets.Topology(num_clients=6, num_edges=2)  # P=3 != C=4
        with pytest.raises(ConfigError):
            datasets.partition(small_dataset, topo, "edge_iid", seed=5)

    def test_edge_niid_covers_half_the_classes(self, small_dataset):
        topo = datasets.Topology(num_clients=8, num_edges=4)  # P=2=ceil(4/2)
        part = datasets.partition(small_dataset, topo, "edge_niid", seed=5)
        for e in range(4):
            labels = np.concatenate([
                small_dataset.labels[part.client_shards[c]]
                for c in part.clients_of_edge(e)
            ])
            assert len(np.unique(labels)) == 2
        # the edges jointly still cover every class
        all_labels = small_dataset.labels[part.assigned_indices()]
        assert len(np.unique(all_labels)) == 4

    def test_edge_niid_needs_divisible_width(self, small_dataset):
        topo = datasets.Topology(num_clients=6, num_edges=2)  # P=3, H=2
        with pytest.raises(ConfigError):
            datasets.partition(small_dataset, topo, "edge_niid", seed=5)

    def test_unknown_scheme(self, small_dataset, topology_8x2):
        with pytest.raises(ConfigError, match="scheme"):
            datasets.partition(small_dataset, topology_8x2, "bogus", seed=5)

    def test_too_few_samples(self, topology_8x2):
        tiny = datasets.generate_synthetic(2, 2, 2, seed=1)  # 4 samples, 8 clients
        with pytest.raises(ConfigError):
            datasets.partition(tiny, topology_8x2, "iid", seed=5)


def test_export_partition(tmp_path, small_dataset, topology_8x2):
    part = datasets.partition(small_dataset, topology_8x2, "iid", seed=5)
    path = tmp_path / "partition.txt"
    datasets.export_partition(small_dataset, part, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# samples=240")
    assert lines[1] == "index\tlabel\tedge\tclient"
    assert len(lines) == 2 + 240
    idx, label, edge, client = lines[2].split("\t")
    assert int(label) == small_dataset.labels[int(idx)]
    assert int(edge) == part.edge_assignment[int(client)]
