"""riskminer: mine disease risk factors from PubMed abstracts.

Pipeline: harvest abstracts per disease, screen them for actual risk-factor
findings, extract the risk-factor text spans, and support human annotation
and evaluation of the results.
"""

__version__ = "0.1.0"
