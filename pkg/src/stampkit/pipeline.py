"""End-to-end orchestration shared by the CLI and the experiment harness."""

import time

import numpy as np

from stampkit import classifier, dictionary, whitening
from stampkit.baselines import gabor_bank, random_bank
from stampkit.dictionary import RankedDictionary
from stampkit.features import extract
from stampkit.imaging import normalize, preprocess, read_image
from stampkit.synth import ManifestRow

LABEL_POS = "stamp"


def load_verification_image(row: ManifestRow, resize_hw: tuple[int, int]) -> np.ndarray:
    """Preprocessed crop for one manifest row.

    Rows with a box are pages: the marked region is cropped before the resize.
    Rows without a box are already crops and go through preprocessing whole.
    """
    img = read_image(row.path)
    if row.box is not None:
        img = img[row.box.y0 : row.box.y1, row.box.x0 : row.box.x1]
    return preprocess(img, resize_hw[0], resize_hw[1])


def load_verification_set(rows, resize_hw):
    """Images and +1/-1 labels for a manifest."""
    images = [load_verification_image(r, resize_hw) for r in rows]
    labels = np.array([1 if r.label == LABEL_POS else -1 for r in rows], dtype=np.int64)
    return images, labels


def load_page(row: ManifestRow) -> np.ndarray:
    """Full page for detection: grayscale and min-max normalized, no resize."""
    return normalize(read_image(row.path))


def sample_training_patches(images, m: int, count: int, rng_seed: int) -> np.ndarray:
    """Random m x m patches drawn across a list of images."""
    if not images:
        raise ValueError("no images to sample patches from")
    rng = np.random.default_rng(rng_seed)
    out = np.empty((count, m, m), dtype=np.float64)
    picks = rng.integers(0, len(images), size=count)
    for i, idx in enumerate(picks):
        img = images[idx]
        h, w = img.shape
        if m > h or m > w:
            raise ValueError(f"patch side {m} does not fit image {img.shape}")
        r = int(rng.integers(0, h - m + 1))
        c = int(rng.integers(0, w - m + 1))
        out[i] = img[r : r + m, c : c + m]
    return out


def learn_dictionary(
    pos_images,
    m: int,
    k: int,
    epsilon: float = 0.01,
    n_patches: int = 20000,
    kmeans_iters: int = 100,
    rng_seed: int = 0,
):
    """Patch sampling, ZCA fit, and K-means over the whitened patches."""
    patches = sample_training_patches(pos_images, m, n_patches, rng_seed)
    transform = whitening.fit_zca(patches, epsilon)
    whitened = whitening.apply_batch(transform, patches)
    atoms = dictionary.kmeans(whitened, k, max_iters=kmeans_iters, rng_seed=rng_seed)
    return transform, atoms


def pick_ranking_images(pos_images, count: int, rng_seed: int):
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(len(pos_images), size=min(count, len(pos_images)), replace=False)
    return [pos_images[int(i)] for i in picks]


def featurize(images, rd: RankedDictionary):
    """Feature matrix for a list of images plus the extraction wall time."""
    start = time.perf_counter()
    rows = [extract(img, rd) for img in images]
    elapsed = time.perf_counter() - start
    return np.vstack(rows), elapsed


def run_benchmark(
    rows,
    resize_hw=(64, 96),
    m: int = 16,
    k: int = 64,
    tau: float = 0.33,
    epsilon: float = 0.01,
    n_patches: int = 20000,
    train_fraction: float = 0.7,
    c: float = 1.0,
    epochs: int = 100,
    rng_seed: int = 0,
    n_rank_images: int = 1,
):
    """Four-way comparison: ranked subset, full dictionary, Gabor, random.

    The dictionary and its ranking are learned on training positives only.
    Every method shares the same split, trainer settings, and encoding path.
    Returns one dict per method; test_time_s is classifier scoring time and
    extract_time_s the feature-extraction time, both over the test set.
    """
    images, labels = load_verification_set(rows, resize_hw)
    train_idx, test_idx = classifier.split(labels, train_fraction, rng_seed)
    pos_train = [images[i] for i in train_idx if labels[i] == 1]
    transform, atoms = learn_dictionary(
        pos_train, m, k, epsilon=epsilon, n_patches=n_patches, rng_seed=rng_seed
    )
    ranking = pick_ranking_images(pos_train, n_rank_images, rng_seed)
    scores = dictionary.rank_atoms(atoms, transform, ranking)
    v = dictionary.select_subset(scores, tau)
    methods = [
        ("K-means", RankedDictionary(atoms, scores, v, transform)),
        ("K-means", RankedDictionary(atoms, scores, k, transform)),
        ("Gabor", gabor_bank(m).as_ranked_dictionary()),
        ("RF", random_bank(m, k, rng_seed).as_ranked_dictionary()),
    ]
    y_train, y_test = labels[train_idx], labels[test_idx]
    train_images = [images[i] for i in train_idx]
    test_images = [images[i] for i in test_idx]
    report = []
    for name, rd in methods:
        x_train, _ = featurize(train_images, rd)
        x_test, extract_time = featurize(test_images, rd)
        model = classifier.train_svm(x_train, y_train, c=c, epochs=epochs, rng_seed=rng_seed)
        ev = classifier.evaluate(model, x_test, y_test)
        report.append(
            {
                "method": name,
                "n_filters": rd.v,
                "accuracy": ev.accuracy,
                "precision": ev.precision,
                "recall": ev.recall,
                "test_time_s": ev.test_time_seconds,
                "extract_time_s": extract_time,
            }
        )
    return report
