from __future__ import annotations

import itertools
import json
import random

import pytest

from mpminer.curation import (
    BalanceError,
    Dataset,
    LabeledExample,
    NegativeCategory,
    SchemaError,
    TooFewStrains,
    attach_negatives,
    emit_finetune_jsonl,
    import_source_table,
    stratified_split,
)
from mpminer.records import (
    NEGATIVE_SENTINEL_TEXT,
    SYSTEM_ROLE_TEXT,
    ExtractionRecord,
    StrainQuery,
    render_extraction_record,
)

CATEGORIES = list(NegativeCategory)


def positive(strain: str, article_id: str) -> LabeledExample:
    genus, species = strain.split(" ", 1)
    return LabeledExample(
        strain=StrainQuery(genus, species),
        article_id=article_id,
        prompt_user_text=f"prompt for {article_id}",
        ideal_output=render_extraction_record(
            ExtractionRecord("45", "heterotrophic", "glucose", "sugar")
        ),
        positive=True,
    )


def negative(strain: str, article_id: str, category: NegativeCategory) -> LabeledExample:
    genus, species = strain.split(" ", 1)
    return LabeledExample(
        strain=StrainQuery(genus, species),
        article_id=article_id,
        prompt_user_text=f"prompt for {article_id}",
        ideal_output=NEGATIVE_SENTINEL_TEXT,
        positive=False,
        category=category,
    )


def strain_name(i: int) -> str:
    return f"Genus{i:03d} species{i:03d}"


def make_dataset(counts: dict[str, int]) -> list[LabeledExample]:
    """One positive plus matching negatives per strain until `counts` is met."""
    examples: list[LabeledExample] = []
    cat_cycle = itertools.cycle(CATEGORIES)
    serial = 0
    for strain, n in counts.items():
        for j in range(n):
            serial += 1
            if j % 2 == 0:
                examples.append(positive(strain, f"p{serial:04d}"))
            else:
                examples.append(negative(strain, f"n{serial:04d}", next(cat_cycle)))
    return examples


class TestLabeledExample:
    def test_positive_requires_parseable_record(self):
        with pytest.raises(ValueError):
            LabeledExample(
                StrainQuery("A", "b"), "x", "p", NEGATIVE_SENTINEL_TEXT, positive=True
            )

    def test_negative_requires_category_and_sentinel(self):
        with pytest.raises(ValueError):
            LabeledExample(StrainQuery("A", "b"), "x", "p", NEGATIVE_SENTINEL_TEXT, positive=False)
        with pytest.raises(ValueError):
            LabeledExample(
                StrainQuery("A", "b"),
                "x",
                "p",
                "not the sentinel",
                positive=False,
                category=NegativeCategory.WRONG_SPECIES,
            )


class TestImportSourceTable:
    HEADER = (
        "genus,species,strain,protein_pct_dry_mass,trophic_mechanism,"
        "reported_substrate,substrate_class,article_id,paper_text_path"
    )

    def write_table(self, tmp_path, rows: list[str]):
        (tmp_path / "paper.txt").write_text("Some paper body.", encoding="utf-8")
        table = tmp_path / "table.csv"
        table.write_text("\n".join([self.HEADER, *rows]) + "\n", encoding="utf-8")
        return table

    def test_happy_path_builds_prompts(self, tmp_path):
        table = self.write_table(
            tmp_path,
            ["Fusarium,venenatum,,45,heterotrophic,glucose,sugar,a1,paper.txt"],
        )
        result = import_source_table(table)
        assert len(result.examples) == 1 and not result.warnings
        example = result.examples[0]
        assert example.positive
        assert "Fusarium venenatum" in example.prompt_user_text
        assert "Some paper body." in example.prompt_user_text
        assert example.ideal_output.startswith("reported protein % dry mass: 45")

    def test_missing_column_is_schema_error(self, tmp_path):
        table = tmp_path / "bad.csv"
        table.write_text("genus,species\nA,b\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            import_source_table(table)

    def test_bad_rows_warn_and_skip(self, tmp_path):
        table = self.write_table(
            tmp_path,
            [
                "Fusarium,venenatum,,45,heterotrophic,glucose,sugar,a1,paper.txt",
                ",venenatum,,45,heterotrophic,glucose,sugar,a2,paper.txt",
                "Fusarium,venenatum,,45,heterotrophic,glucose,sugar,a3,missing.txt",
            ],
        )
        result = import_source_table(table)
        assert len(result.examples) == 1
        assert len(result.warnings) == 2

    def test_tsv_delimiter(self, tmp_path):
        (tmp_path / "paper.txt").write_text("Body.", encoding="utf-8")
        table = tmp_path / "table.tsv"
        table.write_text(
            self.HEADER.replace(",", "\t")
            + "\nFusarium\tvenenatum\t\t45\theterotrophic\tglucose\tsugar\ta1\tpaper.txt\n",
            encoding="utf-8",
        )
        assert len(import_source_table(table).examples) == 1


class TestAttachNegatives:
    def test_balanced_dataset_reports_counts(self):
        pos = [positive(strain_name(0), "p1"), positive(strain_name(1), "p2")]
        neg = [
            negative(strain_name(0), "n1", CATEGORIES[0]),
            negative(strain_name(1), "n2", CATEGORIES[1]),
            negative(strain_name(2), "n3", CATEGORIES[2]),
            negative(strain_name(3), "n4", CATEGORIES[3]),
        ]
        ds = attach_negatives(pos, neg)
        assert ds.balance.per_strain[strain_name(0)] == (1, 1)
        assert set(ds.balance.per_category.values()) == {1}

    def test_strain_missing_negatives_is_balance_error(self):
        pos = [positive(strain_name(0), "p1"), positive(strain_name(0), "p2")]
        neg = [negative(strain_name(0), "n1", CATEGORIES[0])]
        with pytest.raises(BalanceError) as exc:
            attach_negatives(pos, neg)
        assert exc.value.strains == [strain_name(0)]

    def test_category_skew_beyond_one_is_balance_error(self):
        neg = [
            negative(strain_name(i), f"n{i}", CATEGORIES[0]) for i in range(3)
        ] + [negative(strain_name(9), "n9", CATEGORIES[1])]
        with pytest.raises(BalanceError) as exc:
            attach_negatives([], neg)
        assert exc.value.categories

    def test_one_off_category_counts_tolerated(self):
        # 2,1,1,1 spread stays within the +-1 tolerance
        neg = [
            negative(strain_name(i), f"n{i}", cat)
            for i, cat in enumerate([*CATEGORIES, CATEGORIES[0]])
        ]
        ds = attach_negatives([], neg)
        assert sorted(ds.balance.per_category.values()) == [1, 1, 1, 2]

    def test_swapped_arguments_rejected(self):
        with pytest.raises(ValueError):
            attach_negatives([negative(strain_name(0), "n1", CATEGORIES[0])], [])


class TestStratifiedSplit:
    def test_requires_three_strains(self):
        examples = make_dataset({strain_name(0): 4, strain_name(1): 4})
        with pytest.raises(TooFewStrains):
            stratified_split(examples)

    def test_ten_strains_times_two_gives_16_2_2(self):
        examples = make_dataset({strain_name(i): 2 for i in range(10)})
        split = stratified_split(examples, seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (16, 2, 2)

    def test_strains_never_straddle_partitions(self):
        rng = random.Random(3)
        examples = make_dataset(
            {strain_name(i): rng.randint(1, 6) for i in range(12)}
        )
        split = stratified_split(examples, seed=5)
        seen: dict[str, str] = {}
        for name, part in split.partitions().items():
            for e in part:
                assert seen.setdefault(e.strain_key, name) == name

    def test_partitions_cover_all_examples_exactly_once(self):
        examples = make_dataset({strain_name(i): i + 1 for i in range(8)})
        split = stratified_split(examples, seed=2)
        ids = [e.article_id for part in split.partitions().values() for e in part]
        assert sorted(ids) == sorted(e.article_id for e in examples)

    def test_same_seed_reproduces_split(self):
        examples = make_dataset({strain_name(i): 2 for i in range(10)})
        a = stratified_split(examples, seed=42)
        b = stratified_split(examples, seed=42)
        assert a.strain_map() == b.strain_map()

    def test_seed_only_permutes_equal_count_strains(self):
        # Distinct counts everywhere: the seed must not matter at all.
        examples = make_dataset({strain_name(i): i + 1 for i in range(6)})
        maps = {tuple(sorted(stratified_split(examples, seed=s).strain_map().items())) for s in range(5)}
        assert len(maps) == 1

    def test_dominant_strain_lands_in_train(self):
        examples = make_dataset(
            {strain_name(0): 8, strain_name(1): 1, strain_name(2): 1}
        )
        split = stratified_split(examples, seed=0)
        assert (len(split.train), len(split.validation), len(split.test)) == (8, 1, 1)
        assert split.strain_map()[strain_name(0)] == "train"


class TestEmitJsonl:
    def test_chat_format_and_order(self):
        part = [
            negative(strain_name(0), "b2", CATEGORIES[0]),
            positive(strain_name(1), "a1"),
        ]
        payload = emit_finetune_jsonl(part).decode("utf-8")
        lines = payload.splitlines()
        assert len(lines) == 2 and payload.endswith("\n")
        first = json.loads(lines[0])
        assert [m["role"] for m in first["messages"]] == ["system", "user", "assistant"]
        assert first["messages"][0]["content"] == SYSTEM_ROLE_TEXT
        # a1 sorts before b2
        assert first["messages"][2]["content"].startswith("reported protein")

    def test_positives_precede_negatives_within_article(self):
        part = [
            negative(strain_name(0), "a1", CATEGORIES[0]),
            positive(strain_name(1), "a1"),
        ]
        lines = emit_finetune_jsonl(part).decode("utf-8").splitlines()
        assert json.loads(lines[0])["messages"][2]["content"].startswith("reported protein")
        assert json.loads(lines[1])["messages"][2]["content"] == NEGATIVE_SENTINEL_TEXT

    def test_byte_identical_regardless_of_input_order(self):
        part = make_dataset({strain_name(i): 3 for i in range(4)})
        shuffled = list(part)
        random.Random(9).shuffle(shuffled)
        assert emit_finetune_jsonl(part) == emit_finetune_jsonl(shuffled)

    def test_compact_separators_no_ascii_escapes(self):
        example = positive("Trametes versicolor", "a1")
        line = emit_finetune_jsonl([example]).decode("utf-8")
        assert '", "' not in line  # compact separators
        assert "\\u" not in line

    def test_empty_partition_rejected(self):
        with pytest.raises(ValueError):
            emit_finetune_jsonl([])


class TestFingerprint:
    def test_order_insensitive_content_sensitive(self):
        examples = make_dataset({strain_name(i): 2 for i in range(4)})
        ds_a = attach_negatives(
            [e for e in examples if e.positive], [e for e in examples if not e.positive]
        )
        shuffled = list(examples)
        random.Random(1).shuffle(shuffled)
        ds_b = attach_negatives(
            [e for e in shuffled if e.positive], [e for e in shuffled if not e.positive]
        )
        assert ds_a.fingerprint() == ds_b.fingerprint()
        ds_c = Dataset(examples + [positive(strain_name(0), "extra")], ds_a.balance)
        assert ds_c.fingerprint() != ds_a.fingerprint()
