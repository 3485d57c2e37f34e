from .preprocess import PipelineMode, require_ground_truth, preprocess, preprocess_mask, downsample_mask
from .augment import augment
from .segmenter import SegmenterModel, train_segmenter, segment, segment_batch, segmenter_grad_check

__all__ = [
    'PipelineMode', 'require_ground_truth', 'preprocess', 'preprocess_mask', 'downsample_mask',
    'augment', 'SegmenterModel', 'train_segmenter', 'segment', 'segment_batch', 'segmenter_grad_check',
]
