"""
Portfolio files: CSV with header ``id,spread_bp,recovery,notional`` or a
JSON array of records with the same fields.
"""
import json
import logging
from pathlib import Path

import pandas as pd
from rest_framework import serializers

from .exceptions import PortfolioFormatError
from .serializers import portfolio_from_records

logger = logging.getLogger(__name__)

PORTFOLIO_COLUMNS = ('id', 'spread_bp', 'recovery', 'notional')


def _read_csv(path):
    # Keep ids as strings even when they look numeric
    try:
        frame = pd.read_csv(path, dtype={'id': str}, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise PortfolioFormatError(f'{path}: cannot parse CSV: {e}')
    columns = [str(column).strip() for column in frame.columns]
    unknown = sorted(set(columns) - set(PORTFOLIO_COLUMNS))
    missing = [column for column in PORTFOLIO_COLUMNS if column not in columns]
    if unknown or missing:
        raise PortfolioFormatError(
            f'{path}: expected columns {",".join(PORTFOLIO_COLUMNS)}; '
            f'unknown {unknown or "none"}, missing {missing or "none"}'
        )
    frame.columns = columns
    if frame.isnull().values.any():
        raise PortfolioFormatError(f'{path}: empty cells in portfolio file')
    return frame.to_dict(orient='records')


def _read_json(path):
    try:
        records = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise PortfolioFormatError(f'{path}: cannot parse JSON: {e}')
    if not isinstance(records, list):
        raise PortfolioFormatError(f'{path}: expected a JSON array of name records')
    return records


def read_portfolio(path):
    """Load and validate a portfolio file."""
    path = Path(path)
    if not path.is_file():
        raise PortfolioFormatError(f'portfolio file {path} does not exist')
    records = _read_json(path) if path.suffix.lower() == '.json' else _read_csv(path)
    try:
        portfolio = portfolio_from_records(records)
    except serializers.ValidationError as e:
        raise PortfolioFormatError(f'{path}: invalid portfolio: {e.detail}')
    logger.info(f'Loaded {len(portfolio)} names from {path}')
    return portfolio
