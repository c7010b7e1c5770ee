from pathlib import Path

import pytest

from mwe_complexity.corpus import AnnotatedInstance, Dataset, Genre, MweType, SplitTag
from mwe_complexity.synthetic import make_synthetic_dataset

FIXTURES = Path(__file__).parent / "fixtures"
REPO = Path(__file__).resolve().parents[1]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_addoption(parser):
    parser.addoption("--released-data", action="store", default=None,
                     help="directory with the released MWE-CWI data (canonical TSVs "
                          "or the upstream layout)")
    parser.addoption("--bigram-freq", action="store", default=None,
                     help="bigram TSV for the released-data experiments")
    parser.addoption("--cw-lexicon", action="store", default=None,
                     help="word complexity TSV for the released-data experiments")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def released_dir(request):
    opt = request.config.getoption("--released-data")
    path = Path(opt) if opt else REPO / "data" / "released"
    return path if path.is_dir() and any(path.iterdir()) else None


def make_instance(id="i1", phrase="property sector", prob=None, native=1, non=0,
                  mwe=MweType.MW_COMPOUND, genre=Genre.NEWS, split=SplitTag.TRAIN,
                  left="The ", right=" collapsed.", native_seen=10, nonnative_seen=10):
    sentence = left + phrase + right
    marked = native + non
    if prob is None:
        prob = marked / 20
    return AnnotatedInstance(
        id=id, genre=genre, split=split, sentence=sentence,
        start=len(left), end=len(left) + len(phrase), phrase=phrase,
        native_seen=native_seen, nonnative_seen=nonnative_seen,
        native_marked=native, nonnative_marked=non,
        binary=int(marked > 0), prob=prob, mwe_type=mwe,
    )


@pytest.fixture
def inst_factory():
    return make_instance


@pytest.fixture(scope="session")
def synthetic():
    return make_synthetic_dataset(n=4732, seed=0)


@pytest.fixture(scope="session")
def small_synthetic():
    return make_synthetic_dataset(n=400, seed=3)


def dataset(*instances):
    return Dataset(tuple(instances))
