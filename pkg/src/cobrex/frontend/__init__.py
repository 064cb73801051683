from .model import (
    LINKAGE,
    WORKING_STORAGE,
    BoolOp,
    Comparison,
    Condition,
    ConditionName,
    DataDictionary,
    DataItem,
    NotOp,
    Paragraph,
    ScreenField,
    SourceUnit,
    Statement,
    WhenArm,
    condition_reads,
)
from .parser import (
    literal_value,
    parse_copybook,
    parse_source,
    picture_is_numeric,
    picture_size,
    render_data_item,
    render_source,
)
from .rwsets import apply_read_write_sets, read_write_sets
from .screens import parse_screen_map

__all__ = [
    "LINKAGE",
    "WORKING_STORAGE",
    "BoolOp",
    "Comparison",
    "Condition",
    "ConditionName",
    "DataDictionary",
    "DataItem",
    "NotOp",
    "Paragraph",
    "ScreenField",
    "SourceUnit",
    "Statement",
    "WhenArm",
    "condition_reads",
    "literal_value",
    "parse_copybook",
    "parse_source",
    "parse_screen_map",
    "picture_is_numeric",
    "picture_size",
    "render_data_item",
    "render_source",
    "apply_read_write_sets",
    "read_write_sets",
]
