"""Burst/break analysis of peer-support activity logs."""

__version__ = "0.1.0"

from .bursts import (  # noqa: E402
    Burst,
    BurstinessReport,
    SegmentationConfig,
    SweepPoint,
    burst_meta,
    burstiness,
    segment_bursts,
    segment_corpus,
    sweep_n,
)
from .events import (  # noqa: E402
    Corpus,
    FilterConfig,
    Post,
    PostKind,
    Thread,
    UserTimeline,
    build_corpus,
    filter_users,
    parse_posts,
)
from .moods import MoodGroup, MoodMap, default_mood_map, mood_group_of  # noqa: E402
from .outcomes import (  # noqa: E402
    BurstOutcome,
    MocPhraseSet,
    detect_moc,
    engagement,
    label_corpus,
    mood_change,
    split_pre_post_moc,
)
from .stats import (  # noqa: E402
    KsResult,
    category_metrics,
    compare_groups,
    conditioned_mood_change,
    ks_two_sample,
)
from .support import (  # noqa: E402
    AffectScores,
    LexiconSet,
    SupportLabel,
    affect_scores,
    burst_support_profile,
    classify_support,
)
from .synth import GeneratorConfig, GroundTruth, evaluate_segmentation, generate_corpus  # noqa: E402
