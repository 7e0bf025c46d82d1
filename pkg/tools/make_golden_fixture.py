#!/usr/bin/env python3
"""Regenerate the golden end-to-end fixture under tests/fixtures/golden/.

Three diseases, ~30 recorded PubMed abstracts, KEGG flat-file records and a
seed QA dataset. The recorded responses match exactly the requests the
pipeline issues with page_size=8, so the whole run works offline.
Deterministic; safe to re-run.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from xml.sax.saxutils import escape

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from riskminer.evalkit.dataset import AnswerSpan, QAItem, save_qa_dataset  # noqa: E402
from riskminer.harvest import EFETCH_URL, ESEARCH_URL, build_query  # noqa: E402

OUT = REPO / "tests" / "fixtures" / "golden"
PAGE_SIZE = 8

KEGG_RECORDS = {
    "H00004": """ENTRY       H00004                      Disease
NAME        Chronic myeloid leukemia;
            CML
DESCRIPTION A myeloproliferative neoplasm of granulocytic lineage driven by the
            BCR-ABL1 fusion.
DBLINKS     ICD-11: 2A20.0
            ICD-10: C92.1
            MeSH: D015464
///
""",
    "H00021": """ENTRY       H00021                      Disease
NAME        Renal cell carcinoma;
            RCC
DESCRIPTION The most common form of kidney cancer, arising from renal tubular
            epithelium.
DBLINKS     ICD-11: 2C90
            ICD-10: C64
            MeSH: D002292
///
""",
    "H00218": """ENTRY       H00218                      Disease
NAME        Cystic fibrosis;
            CF
DESCRIPTION An autosomal recessive disorder of chloride transport caused by CFTR
            mutations, marked by thickened mucus in lungs and pancreas.
DBLINKS     ICD-11: CA25
            ICD-10: E84
            MeSH: D003550
///
""",
}

DISEASE_NAMES = {
    "H00004": "Chronic myeloid leukemia",
    "H00021": "Renal cell carcinoma",
    "H00218": "Cystic fibrosis",
}

# The abstract excerpts the acceptance checks hang on: the CML abstract must
# screen POS, the RCC abstract must screen NEG.
CML_KEY_ABSTRACT = [
    ("METHODS", "We conducted a population-based case-control study of gastrointestinal "
                "conditions preceding a first diagnosis of chronic myeloid leukemia."),
    ("RESULTS", "Previous diagnoses of dyspepsia, gastritis or peptic ulcers, as well as "
                "previous proton pump inhibitor (PPI) medication, were all associated with a "
                "significantly increased risk of CML (RRs, 1.5-2.0; P = 0.0005-0.05). "
                "Meanwhile, neither inflammatory bowel disease nor intake of NSAIDs were "
                "associated with CML, indicating that it is not gastrointestinal ulcer or "
                "inflammation per se that influences risk."),
]

RCC_KEY_ABSTRACT = [
    ("RESULTS", "A total of 888 incident RCCs and 356 RCC deaths were identified. In models "
                "including adjustment for body mass index and energy intake, there was no "
                "higher risk of incident RCC associated with consumption of juices (HR per "
                "100 g/day increment = 1.03; 95% CI, 0.97-1.09), total soft drinks (HR = "
                "1.01; 95% CI, 0.98-1.05), or artificially sweetened beverages."),
    ("CONCLUSIONS", "Consumption of juices or soft drinks was not associated with RCC "
                    "incidence or mortality after adjusting for obesity."),
]

CF_KEY_ABSTRACT = [
    ("BACKGROUND", "Cystic fibrosis, like other chronic diseases, is a risk factor for the "
                   "development of elevated symptoms of depression and anxiety."),
    ("RESULTS", "Patient anxiety (OR 2.33) and depression (OR 4.09) were significantly "
                "associated with forced expiratory volume in one second (FEV1) <40% and "
                "forced vital capacity (FVC) <80% (OR 1.60 and 1.61, respectively)."),
    ("CONCLUSIONS", "Cystic fibrosis increases the risk of developing anxiety and depression "
                    "in female patients and in mothers."),
]

SHARED_PMID = "52009999"

# pmid -> (title, sections, year, mesh). sections None means no abstract.
ABSTRACTS = {
    # --- chronic myeloid leukemia ------------------------------------------
    "52000101": ("Gastrointestinal disease and subsequent chronic myeloid leukemia.",
                 CML_KEY_ABSTRACT, 2019, ["Leukemia, Myelogenous, Chronic", "Risk Factors"]),
    "52000102": ("Tobacco exposure and myeloid malignancies in a registry cohort.",
                 [("", "Current smoking was a significant risk factor for chronic myeloid "
                       "leukemia in this registry, with a dose-response pattern across "
                       "pack-year strata.")], 2015,
                 ["Smoking", "Risk Factors"]),
    "52000103": ("Occupational benzene exposure and chronic myeloid leukemia.",
                 [("METHODS", "We pooled three case-control studies of occupational exposures."),
                  ("RESULTS", "High benzene exposure carried an elevated odds ratio for chronic "
                              "myeloid leukemia (OR, 2.1; 95% CI, 1.3-3.4).")], 2017,
                 ["Benzene", "Occupational Exposure"]),
    "52000104": ("Imatinib response kinetics in first-line therapy.",
                 [("", "We describe molecular response trajectories in 210 patients receiving "
                       "first-line imatinib and their association with treatment milestones.")],
                 2016, ["Imatinib Mesylate"]),
    "52000105": ("Mobile phone use and chronic myeloid leukemia: a cohort analysis.",
                 [("RESULTS", "Cumulative call time was not associated with chronic myeloid "
                              "leukemia in any latency window examined.")], 2014,
                 ["Cell Phone Use"]),
    "52000106": ("Ionizing radiation and leukemia subtypes after radiotherapy.",
                 [("", "Prior radiotherapy conferred an increased risk of chronic myeloid "
                       "leukemia within ten years of exposure.")], 2013,
                 ["Radiation, Ionizing", "Risk Factors"]),
    "52000107": ("Chronic myeloid leukemia incidence trends 1990-2010.",
                 None, 2012, ["Incidence"]),
    "52000108": ("Obesity and myeloproliferative neoplasms in two prospective cohorts.",
                 [("RESULTS", "Body mass index above 30 was associated with a significantly "
                              "increased risk of chronic myeloid leukemia (HR 1.4; 95% CI, "
                              "1.1-1.8).")], 2018,
                 ["Obesity", "Risk Factors"]),
    "52000109": ("Cytogenetic monitoring practices across treatment centers.",
                 [("", "We surveyed cytogenetic monitoring schedules in 44 centers and report "
                       "adherence to consensus recommendations.")], 2011,
                 ["Cytogenetic Analysis"]),
    # --- renal cell carcinoma ----------------------------------------------
    "52000201": ("Sweetened beverage consumption and renal cell carcinoma in a prospective "
                 "cohort.", RCC_KEY_ABSTRACT, 2019,
                 ["Carcinoma, Renal Cell", "Beverages"]),
    "52000202": ("Hypertension and kidney cancer risk in a pooled analysis.",
                 [("RESULTS", "Hypertension was an independent risk factor for renal cell "
                              "carcinoma (OR, 1.7; 95% CI, 1.4-2.0).")], 2016,
                 ["Hypertension", "Risk Factors"]),
    "52000203": ("Smoking cessation and renal cell carcinoma incidence.",
                 [("", "Former smokers retained an increased risk of renal cell carcinoma for "
                       "fifteen years after cessation.")], 2015, ["Smoking Cessation"]),
    "52000204": ("Surgical margins in partial nephrectomy: a technical note.",
                 [("", "We describe a standardized approach to margin assessment during "
                       "partial nephrectomy in 88 consecutive cases.")], 2013,
                 ["Nephrectomy"]),
    "52000205": ("Trichloroethylene exposure and renal cell carcinoma.",
                 [("RESULTS", "Occupational trichloroethylene exposure was a risk factor for "
                              "renal cell carcinoma (odds ratio 1.9; 95% CI, 1.1-3.3).")],
                 2014, ["Trichloroethylene", "Occupational Exposure"]),
    "52000206": ("Coffee intake and renal cell carcinoma mortality.",
                 [("RESULTS", "Coffee intake was not associated with renal cell carcinoma "
                              "mortality in adjusted models.")], 2017, ["Coffee"]),
    "52000207": ("Imaging surveillance intervals after nephrectomy.",
                 None, 2012, ["Diagnostic Imaging"]),
    "52000208": ("Obesity, diabetes and renal cell carcinoma in women.",
                 [("RESULTS", "Both obesity and type 2 diabetes carried an increased risk of "
                              "renal cell carcinoma among women (HR 1.6 and 1.3).")], 2018,
                 ["Obesity", "Diabetes Mellitus, Type 2", "Risk Factors"]),
    "52000209": ("Laparoscopic versus open radical nephrectomy outcomes.",
                 [("", "Perioperative outcomes were compared between laparoscopic and open "
                       "radical nephrectomy across 312 procedures.")], 2010,
                 ["Laparoscopy"]),
    # --- cystic fibrosis -----------------------------------------------------
    "52000301": ("Depression and anxiety screening in cystic fibrosis care.",
                 CF_KEY_ABSTRACT, 2016, ["Cystic Fibrosis", "Depression", "Anxiety"]),
    "52000302": ("CFTR genotype and early Pseudomonas acquisition.",
                 [("RESULTS", "Severe CFTR genotypes were a risk factor for early Pseudomonas "
                              "aeruginosa acquisition (OR, 2.8; 95% CI, 1.6-4.9).")], 2015,
                 ["Cystic Fibrosis", "Pseudomonas aeruginosa", "Risk Factors"]),
    "52000303": ("Nutrition support pathways in pediatric cystic fibrosis.",
                 [("", "We audited nutrition support pathway adherence across eight pediatric "
                       "centers over two years.")], 2013, ["Nutritional Support"]),
    "52000304": ("Cystic fibrosis-related diabetes and pulmonary decline.",
                 [("RESULTS", "Cystic fibrosis-related diabetes carried an increased risk of "
                              "accelerated FEV1 decline (P < 0.001).")], 2017,
                 ["Cystic Fibrosis", "Diabetes Mellitus", "Risk Factors"]),
    "52000305": ("Airway clearance technique preferences among adults with cystic fibrosis.",
                 [("", "Adults with cystic fibrosis reported technique preferences and "
                       "adherence patterns in a national survey.")], 2014,
                 ["Respiratory Therapy"]),
    "52000306": ("Vitamin D status and pulmonary exacerbations in cystic fibrosis.",
                 [("RESULTS", "Vitamin D deficiency was a risk factor for pulmonary "
                              "exacerbation in cystic fibrosis (OR, 1.9; 95% CI, 1.2-3.1).")],
                 2018, ["Vitamin D Deficiency", "Risk Factors"]),
    "52000307": ("Newborn screening algorithms for cystic fibrosis.",
                 None, 2011, ["Neonatal Screening"]),
    "52000308": ("Environmental tobacco smoke and lung function in cystic fibrosis.",
                 [("RESULTS", "Environmental tobacco smoke exposure was associated with a "
                              "significantly increased risk of low lung function among "
                              "children with cystic fibrosis.")], 2019,
                 ["Tobacco Smoke Pollution", "Risk Factors"]),
    "52000309": ("Transition clinic models for adolescents with cystic fibrosis.",
                 [("", "We compare three transition clinic models and describe staffing, "
                       "scheduling and patient satisfaction.")], 2012,
                 ["Transition to Adult Care"]),
    # --- shared: retrieved by both CML and CF queries -------------------------
    SHARED_PMID: ("Chronic illness and secondary malignancy surveillance: cystic fibrosis "
                  "and chronic myeloid leukemia case series.",
                  [("", "In this case series, prolonged immunosuppression was a risk factor "
                        "for secondary malignancy in patients with cystic fibrosis and in "
                        "survivors of chronic myeloid leukemia.")], 2020,
                  ["Immunosuppression Therapy", "Risk Factors"]),
}

SEARCH_IDS = {
    "H00004": ["52000101", "52000102", "52000103", "52000104", "52000105",
               "52000106", "52000107", "52000108", "52000109", SHARED_PMID],
    "H00021": ["52000201", "52000202", "52000203", "52000204", "52000205",
               "52000206", "52000207", "52000208", "52000209"],
    "H00218": ["52000301", "52000302", "52000303", "52000304", "52000305",
               "52000306", "52000307", "52000308", "52000309", SHARED_PMID],
}


def esearch_xml(count: int, ids: list[str], retstart: int, retmax: int) -> str:
    id_lines = "\n".join(f"    <Id>{pmid}</Id>" for pmid in ids)
    return f"""<?xml version="1.0" encoding="UTF-8" ?>
<eSearchResult>
  <Count>{count}</Count>
  <RetMax>{retmax}</RetMax>
  <RetStart>{retstart}</RetStart>
  <IdList>
{id_lines}
  </IdList>
</eSearchResult>
"""


def efetch_xml(pmids: list[str]) -> str:
    articles = []
    for pmid in pmids:
        title, sections, year, mesh = ABSTRACTS[pmid]
        abstract_block = ""
        if sections is not None:
            texts = []
            for label, text in sections:
                attr = f' Label="{escape(label)}"' if label else ""
                texts.append(f"          <AbstractText{attr}>{escape(text)}</AbstractText>")
            abstract_block = "        <Abstract>\n" + "\n".join(texts) + "\n        </Abstract>\n"
        mesh_block = "\n".join(
            f"        <MeshHeading><DescriptorName>{escape(term)}</DescriptorName></MeshHeading>"
            for term in mesh)
        articles.append(f"""  <PubmedArticle>
    <MedlineCitation>
      <PMID>{pmid}</PMID>
      <Article>
        <Journal>
          <JournalIssue>
            <PubDate><Year>{year}</Year></PubDate>
          </JournalIssue>
        </Journal>
        <ArticleTitle>{escape(title)}</ArticleTitle>
{abstract_block}      </Article>
      <MeshHeadingList>
{mesh_block}
      </MeshHeadingList>
    </MedlineCitation>
  </PubmedArticle>""")
    body = "\n".join(articles)
    return f"""<?xml version="1.0" encoding="UTF-8" ?>
<PubmedArticleSet>
{body}
</PubmedArticleSet>
"""


def make_seed_dataset(path: Path) -> None:
    """Seed QA items sized so the 95th-percentile answer length comfortably
    covers whole fixture sentences (longest ~330 chars)."""
    contexts = []
    for i in range(20):
        factor = f"exposure {chr(ord('A') + i)}"
        long_tail = " across all adjusted models and sensitivity analyses in this cohort" \
            if i >= 17 else ""
        answer = (f"{factor} was an independent risk factor for the outcome"
                  f"{long_tail * 4}")
        context = (f"BACKGROUND: Study {i + 1} examined candidate exposures. "
                   f"RESULTS: {answer}. CONCLUSIONS: Confirmation in larger cohorts "
                   f"is warranted.")
        contexts.append((f"item-{i + 1:03d}", context, answer))
    items = []
    disease_cycle = ["H00004", "H00021", "H00218"]
    for idx, (item_id, context, answer) in enumerate(contexts):
        disease_id = disease_cycle[idx % 3]
        start = context.index(answer)
        items.append(QAItem(
            id=item_id,
            disease_id=disease_id,
            pmid=str(51000000 + idx),
            context=context,
            question=f"What are the risk factors for {DISEASE_NAMES[disease_id]}?",
            answers=[AnswerSpan(span_start=start, answer_text=answer)],
            subgroup_only=(idx % 7 == 0),
        ))
    save_qa_dataset(items, path)
    lengths = sorted(len(a) for _, _, a in contexts)
    print(f"seed answers: {len(items)} items, lengths {lengths[0]}..{lengths[-1]}")


def main() -> None:
    kegg_dir = OUT / "kegg"
    entrez_dir = OUT / "entrez"
    kegg_dir.mkdir(parents=True, exist_ok=True)
    entrez_dir.mkdir(parents=True, exist_ok=True)

    for kegg_id, record in KEGG_RECORDS.items():
        (kegg_dir / f"{kegg_id}.txt").write_text(record, encoding="utf-8")

    routes = []
    for kegg_id, ids in SEARCH_IDS.items():
        query = build_query(DISEASE_NAMES[kegg_id])
        count = len(ids)
        for page_index, retstart in enumerate(range(0, count, PAGE_SIZE)):
            page_ids = ids[retstart:retstart + PAGE_SIZE]
            body_name = f"esearch_{kegg_id}_p{page_index}.xml"
            (entrez_dir / body_name).write_text(
                esearch_xml(count, page_ids, retstart, PAGE_SIZE), encoding="utf-8")
            routes.append({
                "url": ESEARCH_URL,
                "params": {"db": "pubmed", "term": query.rendered, "retmode": "xml",
                           "retmax": str(PAGE_SIZE), "retstart": str(retstart)},
                "body": body_name,
            })
        body_name = f"efetch_{kegg_id}.xml"
        (entrez_dir / body_name).write_text(efetch_xml(ids), encoding="utf-8")
        routes.append({
            "url": EFETCH_URL,
            "params": {"db": "pubmed", "retmode": "xml", "id": ",".join(ids)},
            "body": body_name,
        })
    (entrez_dir / "routes.json").write_text(json.dumps({"routes": routes}, indent=2) + "\n",
                                            encoding="utf-8")

    make_seed_dataset(OUT / "seed_qa.json")
    print(f"{len(ABSTRACTS)} abstracts, {len(routes)} recorded routes")


if __name__ == "__main__":
    main()
