"""Plain-text tables and line-delimited report files."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging

from jinja2 import Template, select_autoescape

from acdnet import utils
from acdnet.models import VariantChoices

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1

JINJA_AUTOESCAPE = select_autoescape(enabled_extensions=["html"], default_for_string=False)

SUMMARY_TEMPLATE = """\
Items                         Size
# patients                    {{ s.patients }}
# clinical events             {{ s.clinical_events }}
# diagnoses                   {{ s.diagnoses }}
# procedures                  {{ s.procedures }}
# medicines                   {{ s.medications }}
avg # of visits               {{ "%.4f"|format(s.avg_visits) }}
max # of visits               {{ s.max_visits }}
avg # of diagnoses            {{ "%.4f"|format(s.avg_diagnoses) }}
max # of diagnoses            {{ s.max_diagnoses }}
avg # of procedures           {{ "%.4f"|format(s.avg_procedures) }}
max # of procedures           {{ s.max_procedures }}
avg # of medicines            {{ "%.4f"|format(s.avg_medications) }}
max # of medicines            {{ s.max_medications }}
# DDI pairs                   {{ s.ddi_pairs }}
# EHR pairs                   {{ s.ehr_pairs }}
DDI rate of records           {{ "%.5f"|format(s.ddi_rate) }}
"""

METRICS_TEMPLATE = """\
{{ title }} ({{ report.rounds }} rounds, {{ report.samples }} patients per round)
{% for name, value in report.metrics.items() -%}
{{ "%-14s"|format(name) }}{{ "%.4f"|format(value.mean) }} +- {{ "%.4f"|format(value.std) }}
{% endfor -%}
"""

COMPARISON_TEMPLATE = """\
{{ "%-34s"|format(label) }}{% for name in columns %}{{ "%-20s"|format(name) }}{% endfor %}
{% for row in rows -%}
{{ "%-34s"|format(row.name) }}{% for name in columns %}{{ "%-20s"|format("%.4f +- %.4f"|format(row.report.metrics[name].mean, row.report.metrics[name].std)) }}{% endfor %}
{% endfor -%}
"""

PREDICTION_TEMPLATE = """\
Patient {{ patient_id }}
{% for visit in visits -%}
Visit {{ visit.visit }}: {{ visit.predicted|length }} recommended
  top: {% for item in visit.ranking %}{{ item.label }} ({{ "%.3f"|format(item.score) }}){% if not loop.last %}, {% endif %}{% endfor %}
{% if visit.correct is not none -%}
  Correct {{ visit.correct|length }}: {{ visit.correct|join(", ") }}
  Unseen {{ visit.unseen|length }}: {{ visit.unseen|join(", ") }}
  Missed {{ visit.missed|length }}: {{ visit.missed|join(", ") }}
{% endif -%}
{% endfor -%}
"""

GRADCHECK_TEMPLATE = """\
Gradient check {{ "PASSED" if report.passed else "FAILED" }}{% if report.corrupt %} (corrupted {{ report.corrupt }} backward){% endif %}
{{ report.results|length }} checks, {{ report.failures|length }} failed
worst: {{ report.worst.suite }} {{ report.worst.name }} {{ "%.3e"|format(report.worst.error) }} (threshold {{ "%.0e"|format(report.worst.threshold) }})
{% for result in report.failures -%}
FAIL {{ result.suite }} {{ result.name }} {{ "%.3e"|format(result.error) }}
{% endfor -%}
"""


def _render(template, **kwargs):
    return Template(template, autoescape=JINJA_AUTOESCAPE).render(**kwargs)


def render_summary(summary):
    """Dataset statistics table."""
    return _render(SUMMARY_TEMPLATE, s=summary)


def render_metrics(report, title="Bootstrap evaluation"):
    """Metric mean and std table of one EvalReport."""
    return _render(METRICS_TEMPLATE, report=report, title=title)


def render_comparison(rows, label, columns=("jaccard", "prauc", "f1", "ddi_rate", "avg_med")):
    """One line per (name, EvalReport) row, used by ablations and sweeps."""
    rows = [{"name": name, "report": report} for name, report in rows]
    return _render(COMPARISON_TEMPLATE, rows=rows, label=label, columns=list(columns))


def render_ablation(rows):
    """Ablation table; rows are (variant key, EvalReport)."""
    return render_comparison([(VariantChoices.label(key), report) for key, report in rows], "Variant")


def render_prediction(patient_id, visits):
    """Per-visit recommendations with the Correct/Unseen/Missed partition."""
    return _render(PREDICTION_TEMPLATE, patient_id=patient_id, visits=visits)


def render_gradcheck(report):
    """Pass/fail summary naming the worst checked input."""
    return _render(GRADCHECK_TEMPLATE, report=report)


def header(report, settings):
    """First record of every report file."""
    return {
        "kind": "header",
        "format_version": FORMAT_VERSION,
        "report": report,
        "settings": settings,
    }


def save_report(path, report, settings, records):
    """Write a report file: header, then one record per line."""
    utils.write_records(path, [header(report, settings)] + list(records))
    LOGGER.info("%s report written to %s", report, path)


def save_predictions(path, settings, visits):
    """Write the per-visit recommendation records of cmd_predict."""
    records = [utils.without_none(dict(visit, kind="prediction")) for visit in visits]
    save_report(path, "predict", settings, records)
