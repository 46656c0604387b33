"""Generates the bundled synthetic corpus for the end-to-end golden test.

Run from the repository root:  python3 tests/data/make_golden.py
Deterministic: regenerating must reproduce the committed files byte for byte.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).parent / "golden"

TOPICS = {
    "CRS-DB": (
        "Databases",
        "Relational data management and SQL.",
        "A. Rossi",
        6,
        "INF/01",
        ["relational", "sql", "index", "transaction", "normalization", "join",
         "schema", "query", "btree", "acid"],
    ),
    "CRS-ML": (
        "Machine Learning",
        "Statistical learning and neural networks.",
        "B. Bianchi",
        9,
        "INF/01",
        ["gradient", "neural", "regression", "classifier", "overfitting",
         "kernel", "training", "feature", "backpropagation", "loss"],
    ),
    "CRS-NET": (
        "Computer Networks",
        "Protocols, routing and transport layers.",
        "C. Verdi",
        6,
        "ING-INF/05",
        ["routing", "tcp", "packet", "congestion", "ethernet", "latency",
         "protocol", "switch", "bandwidth", "socket"],
    ),
    "CRS-SEC": (
        "Software Security",
        "Secure coding and vulnerability analysis.",
        "D. Russo",
        9,
        "ING-INF/05",
        ["vulnerability", "encryption", "overflow", "authentication", "exploit",
         "sandbox", "fuzzing", "injection", "hashing", "threat"],
    ),
    "CRS-LAW": (
        "Data Protection Law",
        "Legal aspects of data processing and privacy.",
        "E. Ferrari",
        6,
        "IUS/01",
        ["privacy", "gdpr", "consent", "liability", "regulation", "processing",
         "controller", "compliance", "anonymization", "rights"],
    ),
}

FILLER = ["today", "we", "discuss", "the", "concept", "of", "in", "detail",
          "with", "examples", "and", "see", "how", "it", "works"]

QUERIES = [
    ("q00", "how do sql queries and indexes work"),
    ("q01", "training neural networks and avoiding overfitting"),
    ("q02", "tcp congestion control and routing protocols"),
    ("q03", "finding buffer overflow vulnerabilities with fuzzing"),
    ("q04", "gdpr consent and privacy compliance"),
    ("q05", "encryption and authentication for secure systems"),
    ("q06", "relational schema normalization and transactions"),
    ("q07", "packet switching latency and bandwidth"),
    ("q08", "legal liability for data processing"),
    ("q09", "gradient descent loss functions for regression"),
]


def main():
    rng = random.Random(20240601)
    courses, lessons, chunks = [], [], []
    for course_id, (title, desc, instructor, credits, discipline, vocab) in TOPICS.items():
        lesson_ids = []
        for li in range(4):
            lesson_id = f"{course_id}-L{li}"
            lesson_ids.append(lesson_id)
            lessons.append(
                {
                    "lesson_id": lesson_id,
                    "course_id": course_id,
                    "index": li,
                    "title": f"{title} lesson {li + 1}",
                    "duration_s": 3600.0,
                }
            )
            t = 0.0
            for ki in range(3):
                words = []
                for _ in range(18):
                    if rng.random() < 0.55:
                        words.append(rng.choice(vocab))
                    else:
                        words.append(rng.choice(FILLER))
                text = " ".join(words) + "."
                chunks.append(
                    {
                        "chunk_id": f"{lesson_id}#{ki}",
                        "lesson_id": lesson_id,
                        "course_id": course_id,
                        "index": ki,
                        "text": text,
                        "start_s": t,
                        "end_s": t + 120.0,
                    }
                )
                t += 120.0
        courses.append(
            {
                "course_id": course_id,
                "title": title,
                "description": desc,
                "instructor": instructor,
                "credits": credits,
                "discipline": discipline,
                "prerequisite_ids": [],
                "lesson_ids": lesson_ids,
            }
        )

    OUT.mkdir(parents=True, exist_ok=True)
    catalogue = {
        "courses": courses,
        "lessons": lessons,
        "chunks": chunks,
        "study_plans": [
            {
                "plan_id": "cs-bachelor",
                "name": "Computer Science",
                "course_ids": [c["course_id"] for c in courses],
            }
        ],
        "students": [],
    }
    (OUT / "catalogue.json").write_text(
        json.dumps(catalogue, indent=1, sort_keys=True) + "\n"
    )
    (OUT / "queries.json").write_text(
        json.dumps([{"query_id": q, "text": t} for q, t in QUERIES], indent=1) + "\n"
    )
    print(f"wrote {len(courses)} courses, {len(lessons)} lessons, {len(chunks)} chunks")


if __name__ == "__main__":
    main()
