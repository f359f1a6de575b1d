"""Pretrained backends: BLIP beam-search captioning and CLIP joint embeddings.

Imported lazily so the deterministic stub works without torch installed.
Model weights must be available locally or downloadable from the hub;
otherwise construction fails with an actionable error.
"""

from __future__ import annotations

from . import RunnerError
from .backends import ImageRecord

_CAPTION_MODEL = "Salesforce/blip-image-captioning-base"
_EMBED_MODEL = "openai/clip-vit-base-patch32"


def _import_stack():
    try:
        import torch
        import transformers
    except ImportError as exc:
        raise RunnerError(
            "hf backend needs torch and transformers (pip install 'caprunner[hf]')"
        ) from exc
    return torch, transformers


def _open_rgb(image: ImageRecord):
    from PIL import Image

    if not image.image_path:
        raise RunnerError(f"image {image.image_id!r} has no image_path")
    return Image.open(image.image_path).convert("RGB")


class HFCaptionBackend:
    name = _CAPTION_MODEL

    def __init__(self, model_id: str = _CAPTION_MODEL, device: str = "cpu"):
        torch, transformers = _import_stack()
        try:
            self.processor = transformers.BlipProcessor.from_pretrained(model_id)
            self.model = transformers.BlipForConditionalGeneration.from_pretrained(
                model_id
            ).to(device)
        except Exception as exc:
            raise RunnerError(f"cannot load caption model {model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = device
        self.version = f"transformers-{transformers.__version__}:{model_id}"
        self._torch = torch

    def captions(self, image: ImageRecord, beam_width: int, num: int) -> list[str]:
        pil = _open_rgb(image)
        inputs = self.processor(images=pil, return_tensors="pt").to(self.device)
        with self._torch.no_grad():
            outputs = self.model.generate(
                **inputs,
                num_beams=max(beam_width, num),
                num_return_sequences=num,
                max_new_tokens=32,
            )
        texts = [
            self.processor.decode(seq, skip_special_tokens=True).strip()
            for seq in outputs
        ]
        distinct = list(dict.fromkeys(t for t in texts if t))
        if len(distinct) < num:
            raise RunnerError(
                f"beam search produced {len(distinct)} distinct captions for "
                f"{image.image_id!r}; need {num} (raise --beams)"
            )
        return distinct[:num]


class HFEmbeddingBackend:
    name = _EMBED_MODEL

    def __init__(self, model_id: str = _EMBED_MODEL, device: str = "cpu"):
        torch, transformers = _import_stack()
        try:
            self.processor = transformers.CLIPProcessor.from_pretrained(model_id)
            self.model = transformers.CLIPModel.from_pretrained(model_id).to(device)
        except Exception as exc:
            raise RunnerError(f"cannot load embedding model {model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = device
        self.dim = int(self.model.config.projection_dim)
        self.version = f"transformers-{transformers.__version__}:{model_id}"
        self._torch = torch

    def _normalized(self, features):
        vec = features[0]
        vec = vec / vec.norm()
        return [float(x) for x in vec.cpu()]

    def embed_text(self, text: str) -> list[float]:
        inputs = self.processor(
            text=[text], return_tensors="pt", padding=True, truncation=True
        ).to(self.device)
        with self._torch.no_grad():
            return self._normalized(self.model.get_text_features(**inputs))

    def embed_image(self, image: ImageRecord) -> list[float]:
        inputs = self.processor(images=_open_rgb(image), return_tensors="pt").to(
            self.device
        )
        with self._torch.no_grad():
            return self._normalized(self.model.get_image_features(**inputs))
