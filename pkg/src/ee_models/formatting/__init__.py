"""
Plain-text report formatting.
"""

from .components import ReportComponents
from .formatters import ReportFormatters
from .templates import ReportTemplates

__all__ = [
    'ReportComponents',
    'ReportFormatters',
    'ReportTemplates',
]
