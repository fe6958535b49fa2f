import enum


class MeasureId(str, enum.Enum):
    q1 = "q1"
    q2 = "q2"
    q3 = "q3"
    q4 = "q4"
    q5 = "q5"


class ExportType(str, enum.Enum):
    csv = "csv"
    excel = "excel"
    json = "json"
    feather = "feather"


class Q5Pooling(str, enum.Enum):
    rss = "rss"  # root-sum-of-squares over bands
    sum = "sum"
