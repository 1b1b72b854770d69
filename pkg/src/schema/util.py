import types
from typing import Any, Literal, Sequence, Union, get_args, get_origin

import polars as pl
from pydantic import BaseModel

# scalar annotations used by the report models
_SCALARS: dict[Any, pl.DataType] = {
    str: pl.Utf8,
    int: pl.Int64,
    float: pl.Float64,
    bool: pl.Boolean,
}


def _literal_dtype(values: tuple) -> pl.DataType:
    if all(isinstance(v, bool) for v in values):
        return pl.Boolean
    if all(isinstance(v, int) for v in values):
        return pl.Int64
    return pl.Utf8


def _column_dtype(annotation) -> pl.DataType:
    origin = get_origin(annotation)
    args = get_args(annotation)
    if origin is Literal:
        return _literal_dtype(args)
    if origin is list:
        return pl.List(_column_dtype(args[0]))
    if origin in (Union, types.UnionType):
        members = [a for a in args if a is not type(None)]
        if len(members) == 1:
            return _column_dtype(members[0])
        return pl.Float64 if set(members) == {int, float} else pl.Utf8
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return pl.Struct(pl_schema_from_pydantic(annotation))
    return _SCALARS.get(annotation, pl.Utf8)


def pl_schema_from_pydantic(model_cls: type[BaseModel], exclude: set[str] | None = None) -> dict[str, pl.DataType]:
    skip = exclude or set()
    return {name: _column_dtype(f.annotation) for name, f in model_cls.model_fields.items() if name not in skip}


def pl_df_from_pydantic_list(data: Sequence[BaseModel], exclude: set[str] | None = None) -> pl.DataFrame:
    """One row per report; nested models become struct columns unless excluded."""
    if not data:
        raise ValueError("cannot build a table from an empty list of records")
    model_cls = type(data[0])
    mixed = [type(item).__name__ for item in data if type(item) is not model_cls]
    if mixed:
        raise TypeError(f"records must all be {model_cls.__name__}, found {sorted(set(mixed))}")
    return pl.DataFrame(
        [item.model_dump(exclude=exclude) for item in data],
        schema=pl_schema_from_pydantic(model_cls, exclude),
    )


def flat_frame(df: pl.DataFrame) -> pl.DataFrame:
    """Struct columns unnested as `<column>.<field>`, all-null columns dropped; the CSV layout."""
    for name, dtype in list(df.schema.items()):
        if isinstance(dtype, pl.Struct):
            df = df.with_columns(
                [pl.col(name).struct.field(f.name).alias(f"{name}.{f.name}") for f in dtype.fields]
            ).drop(name)
    return df.select([c for c in df.columns if df[c].null_count() < df.height])


__all__ = ["pl_schema_from_pydantic", "pl_df_from_pydantic_list", "flat_frame"]
