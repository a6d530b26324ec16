#!/usr/bin/env python3
"""Rebuild data/*.csv from the raw benchmark files.

The raw files ship inside two PyPI wheels, so no dataset site needs to be
reachable:

  responsibly-0.1.2-py3-none-any.whl  -> UCI german.data, ProPublica COMPAS csv
  ethicml-1.3.0-py3-none-any.whl      -> UCI Communities and Crime (crime.csv)

Usage:
  pip download --no-deps responsibly==0.1.2 ethicml==1.3.0 -d /tmp/wheels
  python3 scripts/prepare_datasets.py --wheels /tmp/wheels --out data
"""

import argparse
import csv
import glob
import io
import os
import zipfile
from datetime import datetime

GERMAN_COLUMNS = [
    "CheckingAccountStatus", "LoanDuration", "CreditHistory", "PurposeOfLoan",
    "LoanAmount", "SavingsAccountBalance", "YearsAtCurrentJob",
    "LoanRateAsPercentOfIncome", "PersonalStatus", "OtherDebtors",
    "YearsAtCurrentHome", "Property", "Age", "OtherInstallmentPlans", "Housing",
    "NumberOfOtherLoansAtBank", "JobClass", "NumberOfLiableIndividuals",
    "HasTelephone", "ForeignWorker", "Credit",
]
MALE_STATUS = {"A91", "A93", "A94"}
SINGLE_STATUS = {"A93", "A95"}


def read_member(wheels, suffix):
    for path in sorted(glob.glob(os.path.join(wheels, "*.whl"))):
        with zipfile.ZipFile(path) as z:
            for name in z.namelist():
                if name.endswith(suffix):
                    return z.read(name).decode("utf-8")
    raise SystemExit(f"no wheel in {wheels} contains {suffix}")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}: {len(rows)} rows x {len(header)} columns")


def german(wheels, out):
    text = read_member(wheels, "dataset/german/german.data")
    header = [c for c in GERMAN_COLUMNS if c not in ("PersonalStatus", "Credit")]
    header = header[:8] + ["Gender", "Single"] + header[8:] + ["GoodCustomer"]
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = dict(zip(GERMAN_COLUMNS, line.split()))
        status = rec.pop("PersonalStatus")
        credit = rec.pop("Credit")
        rec["Gender"] = "Male" if status in MALE_STATUS else "Female"
        rec["Single"] = "1" if status in SINGLE_STATUS else "0"
        rec["GoodCustomer"] = "1" if credit == "1" else "0"
        rows.append([rec[c] for c in header])
    write_csv(os.path.join(out, "german_credit.csv"), header, rows)


def compas(wheels, out):
    text = read_member(wheels, "dataset/compas/compas-scores-two-years.csv")
    reader = csv.reader(io.StringIO(text))
    head = next(reader)
    idx = {name: i for i, name in reversed(list(enumerate(head)))}  # first occurrence wins
    header = ["age", "two_year_recid", "c_charge_degree", "sex", "priors_count",
              "length_of_stay", "race", "LowRisk"]
    rows = []
    for r in reader:
        get = lambda c: r[idx[c]]
        if get("days_b_screening_arrest") == "":
            continue
        days = int(float(get("days_b_screening_arrest")))
        if not (-30 <= days <= 30) or get("is_recid") == "-1":
            continue
        if get("c_charge_degree") == "O" or get("score_text") in ("", "NA"):
            continue
        jail_in = datetime.strptime(get("c_jail_in"), "%Y-%m-%d %H:%M:%S")
        jail_out = datetime.strptime(get("c_jail_out"), "%Y-%m-%d %H:%M:%S")
        race = "African-American" if get("race") == "African-American" else "Other"
        rows.append([get("age"), get("two_year_recid"), get("c_charge_degree"), get("sex"),
                     get("priors_count"), str((jail_out - jail_in).days), race,
                     "0" if get("score_text") == "High" else "1"])
    write_csv(os.path.join(out, "compas.csv"), header, rows)


def communities(wheels, out):
    text = read_member(wheels, "data/csvs/crime.csv")
    reader = csv.reader(io.StringIO(text))
    head = next(reader)
    drop = {"communityname", "fold", ">0.06black", "high_crime", "ViolentCrimesPerPop"}
    keep = [i for i, c in enumerate(head) if c not in drop and not c.startswith("state_")]
    target = head.index("ViolentCrimesPerPop")
    records = list(reader)
    crimes = sorted(float(r[target]) for r in records)
    mid = len(crimes) // 2
    median = crimes[mid] if len(crimes) % 2 else (crimes[mid - 1] + crimes[mid]) / 2
    header = [head[i] for i in keep] + ["LowCrime"]
    rows = [[r[i] for i in keep] + ["1" if float(r[target]) <= median else "0"] for r in records]
    write_csv(os.path.join(out, "communities_crime.csv"), header, rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--wheels", required=True, help="directory holding the downloaded wheels")
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    german(args.wheels, args.out)
    compas(args.wheels, args.out)
    communities(args.wheels, args.out)


if __name__ == "__main__":
    main()
