import random

import pytest

from kp5lab.exceptions import ParameterError
from kp5lab.numtheory import (
    AdmissibleIndex,
    PellSolution,
    admissible_index,
    brute_force_admissible,
    compose,
    generate_admissible,
    hyperbola_seeds,
    pell_fundamental,
)


def test_pell_fundamental_for_seven() -> None:
    """
    The fundamental unit of u^2 - 7 v^2 = 1 is (8, 3).

    Returns:
        None
    """
    unit = pell_fundamental(7)
    assert (unit.u, unit.v) == (8, 3)


def test_pell_fundamental_other_ell() -> None:
    """
    Continued fractions give the minimal unit for other non-squares.

    Returns:
        None
    """
    assert (pell_fundamental(2).u, pell_fundamental(2).v) == (3, 2)
    assert (pell_fundamental(13).u, pell_fundamental(13).v) == (649, 180)


def test_pell_fundamental_rejects_squares() -> None:
    """
    Perfect squares and ell < 2 have no unit.

    Returns:
        None
    """
    with pytest.raises(ParameterError):
        pell_fundamental(9)
    with pytest.raises(ParameterError):
        pell_fundamental(1)


def test_first_admissible_indices() -> None:
    """
    The Pell stream yields n = 2, 18, 653, 4701 with their witnesses.

    Returns:
        None
    """
    found = generate_admissible(4)
    assert [(i.n, i.n1) for i in found] == [(2, 1), (18, 7), (653, 247), (4701, 1777)]
    assert [i.alpha_index for i in found[:3]] == [6, 2394, 105484314]


def test_stream_agrees_with_brute_force() -> None:
    """
    Every n <= 10^4 with n^2 + n + 1 = 7 * square comes out of the Pell stream.

    Returns:
        None
    """
    brute = [i.n for i in brute_force_admissible(10_000)]
    assert brute == [i.n for i in generate_admissible(len(brute))]


def test_generated_indices_satisfy_the_condition() -> None:
    """
    n^2 + n + 1 = 7 n1^2 for each of the first eight indices.

    Returns:
        None
    """
    for idx in generate_admissible(8):
        assert idx.n * idx.n + idx.n + 1 == 7 * idx.n1 * idx.n1
        X, Y = 2 * idx.n + 1, 2 * idx.n1
        assert X * X - 7 * Y * Y == -3


def test_seeds_and_composition_stay_on_hyperbola() -> None:
    """
    Seeds of X^2 - 7Y^2 = -3 multiplied by the unit remain solutions.

    Returns:
        None
    """
    unit = pell_fundamental(7)
    seeds = hyperbola_seeds(7, unit)
    assert {(s.X, s.Y) for s in seeds} >= {(2, 1), (5, 2)}
    image = compose(PellSolution(2, 1, 7), unit)
    assert (image.X, image.Y) == (37, 14)


def test_admissible_index_rejects_five() -> None:
    """
    n = 5 fails the admissibility condition and the message names it.

    Returns:
        None
    """
    with pytest.raises(ParameterError, match=r"n\^2 \+ n \+ 1 = 7 \* n1\^2"):
        admissible_index(5)


def test_admissible_index_validates_witness() -> None:
    """
    AdmissibleIndex refuses a wrong witness or alpha_index.

    Returns:
        None
    """
    assert admissible_index(18) == AdmissibleIndex(18, 7, 2394)
    with pytest.raises(ParameterError):
        AdmissibleIndex(18, 6, 18 * 19 * 6)
    with pytest.raises(ParameterError):
        AdmissibleIndex(2, 1, 7)


def test_brute_force_small_ranges() -> None:
    """
    The scan oracle finds [2, 18] up to 20 and nothing up to 1.

    Returns:
        None
    """
    assert [i.n for i in brute_force_admissible(20)] == [2, 18]
    assert brute_force_admissible(1) == []


def test_composition_law_on_random_powers() -> None:
    """
    Composing hyperbola points with unit powers never leaves X^2 - 7Y^2 = -3.

    Returns:
        None
    """
    rng = random.Random(7)
    unit = pell_fundamental(7)
    seeds = hyperbola_seeds(7, unit)
    for _ in range(100):
        point = rng.choice(seeds)
        for _ in range(rng.randint(1, 6)):
            point = compose(point, unit)
        assert point.X * point.X - 7 * point.Y * point.Y == -3
