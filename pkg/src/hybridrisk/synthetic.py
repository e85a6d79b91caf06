"""Synthetic cohorts for tests and demos.

``gaussian_cohort`` has a closed-form Bayes AUROC. ``primary_like`` and
``pima_like`` mimic the column layout of the two real cohorts closely enough
to exercise the full pipeline (categorical tokens, missing cells, implausible
zeros, an outcome driven by glucose, HbA1c, BMI and age) without shipping any
real data.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .tabular import Dataset, load_schema


def gaussian_cohort(n: int, dim: int = 4, gap: float = 0.5, seed: int = 0,
                    prevalence: float = 0.5):
    """Two unit-variance Gaussians whose means differ by ``gap`` per dimension."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < prevalence).astype(np.int64)
    X = rng.standard_normal((n, dim)) + gap * y[:, None]
    return X, y


def bayes_auroc(dim: int = 4, gap: float = 0.5) -> float:
    """AUROC of the Bayes score: ``Phi(||delta mu|| / sqrt 2)``."""
    return float(norm.cdf(gap * np.sqrt(dim) / np.sqrt(2.0)))


_SMOKING = np.array(["No Info", "current", "ever", "former", "never", "not current"],
                    dtype=object)


def primary_like(n: int = 2000, seed: int = 0, missing: float = 0.0) -> Dataset:
    """A cohort with the primary schema and roughly 9% prevalence."""
    rng = np.random.default_rng(seed)
    age = np.clip(rng.normal(42, 22, n), 0.08, 80).round(1)
    bmi = np.clip(rng.normal(27.3, 6.5, n), 10, 95).round(2)
    hyp = (rng.random(n) < expit(-4 + age / 25)).astype(float)
    heart = (rng.random(n) < expit(-5.5 + age / 22)).astype(float)
    gender = np.where(rng.random(n) < 0.58, "Female", "Male").astype(object)
    gender[rng.random(n) < 0.0002] = "Other"
    smoking = _SMOKING[rng.choice(6, n, p=[0.36, 0.09, 0.04, 0.09, 0.35, 0.07])]
    risk = rng.standard_normal(n) + 0.04 * (age - 42) + 0.08 * (bmi - 27) + 0.6 * hyp
    y = (risk > np.quantile(risk, 0.91)).astype(np.int64)
    hba1c = np.where(y == 1, rng.normal(6.9, 1.0, n), rng.normal(5.4, 0.7, n))
    hba1c = np.clip(hba1c, 3.5, 9.0).round(1)
    glucose = np.where(y == 1, rng.normal(190, 55, n), rng.normal(132, 33, n))
    glucose = np.clip(glucose, 80, 300).round()
    cols = {"gender": gender, "age": age, "hypertension": hyp, "heart_disease": heart,
            "smoking_history": smoking, "bmi": bmi, "HbA1c_level": hba1c,
            "blood_glucose_level": glucose, "diabetes": y}
    if missing > 0:
        for name in ("bmi", "HbA1c_level"):
            a = cols[name].copy()
            a[rng.random(n) < missing] = np.nan
            cols[name] = a
    return Dataset(load_schema("builtin:primary"), cols, provenance="primary")


def pima_like(n: int = 768, n_pos: int = 268, seed: int = 0) -> Dataset:
    """A cohort with the PIMA schema, exactly ``n_pos`` positives and coded zeros."""
    rng = np.random.default_rng(seed)
    y = np.zeros(n, dtype=np.int64)
    y[rng.permutation(n)[:n_pos]] = 1
    glucose = np.where(y == 1, rng.normal(141, 31, n), rng.normal(110, 26, n)).round()
    bmi = np.where(y == 1, rng.normal(35, 7, n), rng.normal(30.3, 7.5, n)).round(1)
    age = np.clip(np.where(y == 1, rng.normal(37, 11, n), rng.normal(31, 11, n)), 21, 81).round()
    cols = {
        "Pregnancies": rng.poisson(3.8, n).astype(float),
        "Glucose": np.clip(glucose, 44, 199),
        "BloodPressure": np.clip(rng.normal(72, 12, n), 24, 122).round(),
        "SkinThickness": np.clip(rng.normal(29, 10, n), 7, 99).round(),
        "Insulin": np.clip(rng.normal(155, 110, n), 14, 846).round(),
        "BMI": np.clip(bmi, 18, 67),
        "DiabetesPedigreeFunction": np.clip(rng.gamma(2.0, 0.24, n), 0.078, 2.42).round(3),
        "Age": age,
        "Outcome": y,
    }
    # recorded zeros stand in for missing measurements
    for name, rate in (("Glucose", 0.007), ("BloodPressure", 0.046), ("SkinThickness", 0.3),
                       ("Insulin", 0.49), ("BMI", 0.014)):
        a = cols[name].copy()
        a[rng.random(n) < rate] = 0.0
        cols[name] = a
    return Dataset(load_schema("builtin:pima"), cols, provenance="external")
