#!/usr/bin/env python3
"""Populate data/raw/ with the three benchmark CSVs.

The files are taken from two PyPI wheels that vendor them verbatim:
  responsibly 0.1.2  -> adult.data, adult.test, compas-scores-two-years.csv
  ethicml 1.3.0      -> UCI_Credit_Card.csv (one-hot EDUCATION/MARRIAGE)

The credit file is rewritten into the original UCI column layout
(ID, LIMIT_BAL, SEX, EDUCATION, MARRIAGE, AGE, PAY_0, ..., PAY_AMT6,
default.payment.next.month) with SEX coded 1 = male, 2 = female.
"""
import argparse
import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

RESPONSIBLY = ("responsibly==0.1.2", {
    "responsibly/dataset/adult/adult.data": "adult.data",
    "responsibly/dataset/adult/adult.test": "adult.test",
    "responsibly/dataset/compas/compas-scores-two-years.csv": "compas-scores-two-years.csv",
})
ETHICML = ("ethicml==1.3.0", {"ethicml/data/csvs/UCI_Credit_Card.csv": None})


def download(spec, dest):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", str(dest), spec],
                   check=True)
    name = spec.split("==")[0]
    return next(dest.glob(f"{name}-*.whl"))


def canonical_credit(raw: bytes) -> str:
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    pays = ["PAY_0", "PAY_2", "PAY_3", "PAY_4", "PAY_5", "PAY_6"]
    bills = [f"BILL_AMT{i}" for i in range(1, 7)]
    amts = [f"PAY_AMT{i}" for i in range(1, 7)]
    header = ["ID", "LIMIT_BAL", "SEX", "EDUCATION", "MARRIAGE", "AGE"] + pays + bills + amts + [
        "default.payment.next.month"]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        edu = [k for k in range(7) if r[f"EDUCATION_{k}"] == "1"]
        mar = [k for k in range(4) if r[f"MARRIAGE_{k}"] == "1"]
        if len(edu) != 1 or len(mar) != 1:
            raise SystemExit(f"row {r['ID']}: one-hot columns are not exclusive")
        # ethicml recodes SEX as 1 = female, 0 = male
        sex = "2" if r["SEX"] == "1" else "1"
        w.writerow([r["ID"], r["LIMIT_BAL"], sex, edu[0], mar[0], r["AGE"]] + [r[c] for c in pays + bills + amts]
                   + [r["default-payment-next-month"]])
    return out.getvalue()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "raw"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        wheel = zipfile.ZipFile(download(RESPONSIBLY[0], tmp))
        for member, name in RESPONSIBLY[1].items():
            (out / name).write_bytes(wheel.read(member))
        wheel = zipfile.ZipFile(download(ETHICML[0], tmp))
        (out / "UCI_Credit_Card.csv").write_text(canonical_credit(wheel.read(next(iter(ETHICML[1])))))
    for f in sorted(out.iterdir()):
        print(f"{f.name}: {f.stat().st_size} bytes")


if __name__ == "__main__":
    main()
