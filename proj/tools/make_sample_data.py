#!/usr/bin/env python3
"""Regenerates data/sample_catalog.csv and data/sample_ratings.csv.

The catalog is synthetic: 148 plans spread over 40 HMOs. Higher premium
tiers carry more benefits on average. A handful of HMOs are left without a
rating so the default-rating path is exercised.
"""
import csv
import random
from pathlib import Path

SEED = 20221
N_PLANS = 148
N_HMOS = 40
FEATURES = [
    "family_planning", "mental_health", "dental_care", "telemedicine",
    "cashback_benefit", "anc_delivery", "gym_membership", "annual_screening",
]
WARDS = ["general", "semi_private", "private"]
PLAN_NAMES = ["Bronze", "Silver", "Gold", "Platinum", "Basic", "Plus",
              "Premier", "Family", "Flex", "Elite"]
HMO_WORDS = ["Ark", "Bay", "Crest", "Delta", "Eko", "Fount", "Grace", "Harbor",
             "Iroko", "Jewel", "Kola", "Lekki", "Mainland", "Niger", "Oak",
             "Palm", "Queen", "River", "Sahel", "Tide"]


def main() -> None:
    rng = random.Random(SEED)
    root = Path(__file__).resolve().parent.parent / "data"
    root.mkdir(exist_ok=True)

    hmos = []
    for i in range(N_HMOS):
        name = f"{HMO_WORDS[i % len(HMO_WORDS)]} {'Health' if i < 20 else 'Care'}"
        hmos.append((f"hmo{i + 1:03d}", name))

    # every HMO gets at least 3 plans, the remainder is spread at random
    counts = [3] * N_HMOS
    for _ in range(N_PLANS - 3 * N_HMOS):
        counts[rng.randrange(N_HMOS)] += 1

    rows = []
    for (hmo_id, hmo_name), count in zip(hmos, counts):
        names = rng.sample(PLAN_NAMES, count) if count <= len(PLAN_NAMES) else \
            [f"Plan {k + 1}" for k in range(count)]
        for k, plan_name in enumerate(names):
            tier = rng.choice([1, 1, 2, 2, 3, 4]) if k == 0 else rng.randint(1, 4)
            region = "nationwide" if rng.random() < 0.35 + 0.1 * tier else "lagos"
            p = 0.2 + 0.17 * tier
            flags = ["yes" if rng.random() < p else "no" for _ in FEATURES]
            ward = WARDS[min(2, max(0, tier - 2 + rng.choice([-1, 0, 0, 1])))]
            eye = min(3, max(0, tier - 1 + rng.choice([-1, 0, 0, 1])))
            rows.append([f"{hmo_id}-p{k + 1}", hmo_id, hmo_name,
                         f"{hmo_name} {plan_name}", tier, region,
                         *flags, ward, eye])

    header = ["plan_id", "hmo_id", "hmo_name", "plan_name", "premium_tier",
              "coverage_region", *FEATURES, "ward_type", "eye_care_limit_level"]
    with open(root / "sample_catalog.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    unrated = set(rng.sample([h for h, _ in hmos], 4))
    with open(root / "sample_ratings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["hmo_id", "mean_rating", "rating_count"])
        for hmo_id, _ in hmos:
            if hmo_id in unrated:
                continue
            w.writerow([hmo_id, f"{rng.uniform(2.0, 4.9):.1f}", rng.randint(3, 120)])


if __name__ == "__main__":
    main()
