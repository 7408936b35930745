from zerofail.core import LabeledScore


def pos(sample_id, score, age=15.0):
    return LabeledScore(sample_id, True, score, age)


def neg(sample_id, score, age):
    return LabeledScore(sample_id, False, score, age)
