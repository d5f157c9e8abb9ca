"""Pandera schemas for every CSV the harness writes and reads back."""

import pandera.pandas as pa

TIME_SERIES_DQ = pa.DataFrameSchema(
    {
        "t": pa.Column(float, pa.Check.ge(0)),
        "d": pa.Column(float),
        "q": pa.Column(float),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="time_series_dq",
)

TIME_SERIES_REAL = pa.DataFrameSchema(
    {
        "t": pa.Column(float, pa.Check.ge(0)),
        "val": pa.Column(float),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="time_series_real",
)

STATE_VECTOR = pa.DataFrameSchema(
    {
        "index": pa.Column(int, pa.Check.ge(0), unique=True),
        "value": pa.Column(float),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="state_vector",
)

_FRF_COLUMNS = {
    f"z_{channel}_{part}": pa.Column(float, nullable=True)
    for channel in ("dd", "dq", "qd", "qq")
    for part in ("re", "im")
}

IMPEDANCE_FRF = pa.DataFrameSchema(
    {
        "k": pa.Column(int, pa.Check.ge(0), unique=True),
        "f_hz": pa.Column(float, pa.Check.ge(0)),
        **_FRF_COLUMNS,
        "valid": pa.Column(bool),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="impedance_frf",
)

COMPLEX_PAIR = pa.DataFrameSchema(
    {
        "k": pa.Column(int, pa.Check.ge(0), unique=True),
        "omega_rad_s": pa.Column(float, pa.Check.ge(0)),
        "gplus_re": pa.Column(float),
        "gplus_im": pa.Column(float),
        "gminus_re": pa.Column(float),
        "gminus_im": pa.Column(float),
        "transient_re": pa.Column(float),
        "transient_im": pa.Column(float),
        "residual": pa.Column(float, pa.Check.ge(0)),
        "condition": pa.Column(float, pa.Check.ge(0)),
        "rank": pa.Column(int, pa.Check.ge(0)),
        "valid": pa.Column(bool),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="complex_pair",
)

SPECTRUM = pa.DataFrameSchema(
    {
        "k": pa.Column(int, pa.Check.ge(0), unique=True),
        "omega_rad_s": pa.Column(float, pa.Check.ge(0)),
        "re": pa.Column(float),
        "im": pa.Column(float),
    },
    strict=True,
    coerce=True,
    ordered=True,
    name="spectrum",
)

SCHEMAS = {
    schema.name: schema
    for schema in (TIME_SERIES_DQ, TIME_SERIES_REAL, STATE_VECTOR, IMPEDANCE_FRF, COMPLEX_PAIR, SPECTRUM)
}
