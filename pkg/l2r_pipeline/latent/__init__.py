from .vae import (VaeModel, elbo_loss, train_vae, encode, decode, encode_batch, decode_batch,
                  grad_check, reconstruction_iou, save_vae, load_vae)
from .collect import collect_vae_dataset

__all__ = [
    'VaeModel', 'elbo_loss', 'train_vae', 'encode', 'decode', 'encode_batch', 'decode_batch',
    'grad_check', 'reconstruction_iou', 'save_vae', 'load_vae', 'collect_vae_dataset',
]
