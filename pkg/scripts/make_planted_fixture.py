"""Regenerate the bundled synthetic embedding fixture and word lists."""
from pathlib import Path

from fairaudit.stereotype import AttributePair, planted_table

DATA = Path(__file__).resolve().parents[1] / "src" / "fairaudit" / "data"

ADJECTIVES = {
    "strong": 0.9, "brave": 0.6, "logical": 0.4, "ambitious": 0.3,
    "gentle": -0.7, "caring": -0.8, "emotional": -0.5, "polite": -0.2,
}
OCCUPATIONS = {
    "engineer": 0.8, "pilot": 0.7, "surgeon": 0.5, "programmer": 0.6,
    "nurse": -0.9, "secretary": -0.6, "librarian": -0.4, "teacher": -0.1,
}


def main():
    table, _ = planted_table({**ADJECTIVES, **OCCUPATIONS}, AttributePair("he", "she"), dim=16, seed=2016)
    (DATA / "planted_embeddings.txt").write_text(table.to_text(), encoding="utf-8")
    (DATA / "adjectives.txt").write_text(
        "# adjectives scored against he/she\n" + "\n".join(ADJECTIVES) + "\n", encoding="utf-8")
    (DATA / "occupations.txt").write_text(
        "# occupations scored against he/she\n" + "\n".join(OCCUPATIONS) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
