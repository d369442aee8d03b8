from factseq.corpuskit.corpus import CorpusExample, read_corpus, write_corpus
from factseq.corpuskit.synth import CorruptionSpec, build_qagen, build_vocabulary, generate_corpus

__all__ = [
    "CorpusExample",
    "CorruptionSpec",
    "build_qagen",
    "build_vocabulary",
    "generate_corpus",
    "read_corpus",
    "write_corpus",
]
