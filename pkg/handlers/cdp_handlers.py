import argparse
import asyncio
import logging
from pathlib import Path
from typing import List

import config
from bench import resolve_alpha_hat
from cdp import image_recover
from handlers.common import RunSession, resolved_config, solver_config
from models.schemas import CorruptionSpec
from utils.artifacts import emit_cdp_csv
from utils.images import load_image, save_image

logger = logging.getLogger(__name__)


async def cmd_cdp(args: argparse.Namespace, argv: List[str]) -> int:
    """Corrupted CDP recovery of an image, channel by channel."""
    planes = load_image(args.image)
    alpha_hat = resolve_alpha_hat(args.corrupt_frac, alpha_hat=args.alpha_hat)
    cfg = solver_config(args, alpha_hat)
    corruption = CorruptionSpec(fraction=args.corrupt_frac, magnitude_scale=args.corrupt_mag)
    resolved = resolved_config(args, alpha_hat=alpha_hat)

    async with RunSession("cdp", argv, args, args.seed, resolved) as session:
        result = await asyncio.to_thread(image_recover, planes, args.K, cfg, corruption, args.seed)

        for channel in result.channels:
            if channel.degenerate:
                print(config.MESSAGES["zero_image"].format(channel=channel.channel))
                await session.log("zero_channel", f"channel {channel.channel} of {args.image}")
            print(config.MESSAGES["cdp_channel"].format(
                channel=channel.channel, rel_error=channel.relative_error, iterations=channel.iterations,
            ))

        image_path = session.path(f"reconstruction{Path(args.image).suffix.lower()}")
        save_image(result.planes, image_path)
        session.add_output(image_path)
        session.add_output(await emit_cdp_csv(Path(args.image).name, result.channels, session.path("cdp.csv")))
        logger.info(f"Aggregate relative error {result.relative_error:.3e}")
        print(config.MESSAGES["cdp_done"].format(path=image_path))
    return config.EXIT_OK
