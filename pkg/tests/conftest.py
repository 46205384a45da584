import numpy as np
import pytest

from vandalscore import _accel


@pytest.fixture(params=_accel.available_backends())
def backend(request):
    """Run a test under every available kernel backend."""
    previous = _accel.backend_name()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


class SmallArtifacts:
    """A tiny synthetic corpus with a trained model and frozen state."""

    def __init__(self, root):
        from vandalscore import context, gbm, ingest, pipeline, synth, timesplit
        from vandalscore.gbm import GBMParams

        self.root = root
        self.xml = str(root / "corpus.xml")
        self.meta = str(root / "metadata.csv")
        self.truth = str(root / "truth.csv")
        self.model_path = str(root / "model.gbm")
        self.state_path = str(root / "state")
        priv = str(root / "privileged.txt")
        bots = str(root / "bots.txt")

        config = synth.SynthConfig(n=700, seed=13, vandalism_rate=0.05)
        self.stats = synth.generate(config, self.xml, self.meta, self.truth, priv, bots)
        self.pairs = ingest.stream_corpus(self.xml, self.meta)
        split = timesplit.split_corpus(self.pairs)
        privileged = [l.strip() for l in open(priv)]
        bot_names = [l.strip() for l in open(bots)]
        self.store = context.build_state_store(
            split["train"], privileged=privileged, bots=bot_names)
        self.matrix = pipeline.extract_matrix(self.pairs, self.store)
        truth_map = ingest.read_truth_csv(self.truth)
        y = np.array([truth_map[i] for i in self.matrix["ids"]], dtype=float)
        self.labels = y
        self.model = gbm.train(
            self.matrix["X"], y, GBMParams(max_depth=3, rounds=15),
            schema_hash=self.store.schema.hash_hex())
        gbm.save_model(self.model, self.model_path)
        context.save_state(self.store, self.state_path)

    def scorer(self, **kwargs):
        from vandalscore import pipeline

        return pipeline.RevisionScorer(self.model, self.store, **kwargs)


@pytest.fixture(scope="session")
def small_artifacts(tmp_path_factory):
    return SmallArtifacts(tmp_path_factory.mktemp("artifacts"))
