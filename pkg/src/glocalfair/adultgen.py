"""Deterministic generator for Adult-Income-style CSV files.

The real census extract cannot be redistributed here, so experiments run on
a generated stand-in with the same schema: income depends on age, education,
hours and capital gain, with additive advantages for men and white subjects
plus unobserved noise. Trained classifiers therefore miss borderline
positives from the disadvantaged groups, reproducing the dataset's
well-known gender/race disparities in FNR and equalized odds.
"""

from __future__ import annotations

import numpy as np

EDUCATION_BY_NUM = {
    6: "10th", 7: "11th", 8: "12th", 9: "HS-grad", 10: "Some-college",
    11: "Assoc-voc", 12: "Assoc-acdm", 13: "Bachelors", 14: "Masters",
    15: "Prof-school", 16: "Doctorate",
}
WORKCLASS = ["Private", "Self-emp-not-inc", "Local-gov", "State-gov", "Federal-gov"]
MARITAL = ["Married-civ-spouse", "Never-married", "Divorced", "Widowed"]
OCCUPATION = [
    "Exec-managerial", "Prof-specialty", "Craft-repair", "Adm-clerical",
    "Sales", "Other-service", "Machine-op-inspct", "Transport-moving",
]
RELATIONSHIP = ["Husband", "Wife", "Not-in-family", "Own-child", "Unmarried"]
RACE_OTHER = ["Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]
COUNTRY = ["United-States", "Mexico", "Philippines", "Germany", "Canada"]

HEADER = (
    "age,workclass,fnlwgt,education,education-num,marital-status,occupation,"
    "relationship,race,sex,capital-gain,capital-loss,hours-per-week,"
    "native-country,income"
)


def generate_rows(
    n: int,
    seed: int,
    male_rate: float = 0.55,
    white_rate: float = 0.75,
    male_bonus: float = 1.1,
    white_bonus: float = 0.6,
    noise_scale: float = 0.9,
    income_threshold: float = 2.6,
) -> list[str]:
    rng = np.random.default_rng(seed)
    male = rng.uniform(size=n) < male_rate
    white = rng.uniform(size=n) < white_rate
    age = np.clip(rng.normal(38, 13, n), 17, 90).astype(int)
    edu = np.clip(rng.normal(10, 2.5, n).round(), 6, 16).astype(int)
    hours = np.clip(rng.normal(40, 10, n), 1, 99).astype(int)
    gain = np.where(rng.uniform(size=n) < 0.08, rng.integers(2000, 20000, n), 0)
    loss = np.where(rng.uniform(size=n) < 0.04, rng.integers(100, 2500, n), 0)
    fnlwgt = rng.integers(20000, 400000, n)

    score = (
        0.045 * (age - 38)
        + 0.45 * (edu - 10)
        + 0.035 * (hours - 40)
        + 0.9 * (gain > 0)
        + male_bonus * male
        + white_bonus * white
        + rng.normal(0, noise_scale, n)
    )
    income = score > income_threshold

    rows = []
    for i in range(n):
        rel = (
            ("Husband" if male[i] else "Wife")
            if rng.uniform() < 0.5
            else rng.choice(RELATIONSHIP[2:])
        )
        rows.append(
            ",".join(
                [
                    str(age[i]),
                    rng.choice(WORKCLASS),
                    str(fnlwgt[i]),
                    EDUCATION_BY_NUM[int(edu[i])],
                    str(edu[i]),
                    rng.choice(MARITAL),
                    rng.choice(OCCUPATION),
                    rel,
                    "White" if white[i] else rng.choice(RACE_OTHER),
                    "Male" if male[i] else "Female",
                    str(gain[i]),
                    str(loss[i]),
                    str(hours[i]),
                    rng.choice(COUNTRY),
                    ">50K" if income[i] else "<=50K",
                ]
            )
        )
    return rows


def write_adult_like_csv(path, n: int, seed: int, **kwargs) -> None:
    rows = generate_rows(n, seed, **kwargs)
    with open(path, "w", encoding="utf-8") as f:
        f.write(HEADER + "\n")
        f.write("\n".join(rows) + "\n")
