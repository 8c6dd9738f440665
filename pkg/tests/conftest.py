import datetime as dt

import pytest

from cliquespam.data import Dataset, Review

D0 = dt.date(2020, 1, 1)


def make_ds(rows):
    """rows: (user, product, rating, day offset, filtered[, text])."""
    reviews = []
    for k, row in enumerate(rows):
        u, p, rating, day, filt = row[:5]
        text = row[5] if len(row) > 5 else "plain words here."
        reviews.append(Review(f"r{k:03d}", u, p, rating, D0 + dt.timedelta(days=day), filt, text))
    return Dataset.from_reviews(reviews)


@pytest.fixture
def toy_ds():
    return make_ds([
        ("u1", "A", 5, 0, True, "GREAT food!"),
        ("u1", "B", 5, 0, True, "GREAT food!"),
        ("u2", "A", 3, 10, False, "It was fine. Service was slow."),
        ("u2", "C", 4, 40, False, "Nice place to eat."),
        ("u3", "A", 4, 3, False, "Good."),
        ("u3", "B", 2, 50, False, "Not my favourite."),
        ("u4", "C", 1, 20, True, "awful"),
    ])
