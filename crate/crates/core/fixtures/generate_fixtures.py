#!/usr/bin/env python3
"""Regenerates the recorded harvest fixture under fixtures/harvest/.

Two small forums and a shop API are written as an index.json plus one body
file per URL. Run from anywhere; output is deterministic.
"""

import hashlib
import json
import os
import shutil

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "harvest")
FETCHED_AT = "2020-04-01T12:00:00Z"

BHW = "https://blackhatworld.fixture.test"
CRACKED = "https://cracked.fixture.test"
API = "https://api.shop.test/v1"

entries = []


def record(url, body, status=200, content_type="text/html; charset=utf-8"):
    name = hashlib.sha256(url.encode()).hexdigest()[:16] + ".body"
    with open(os.path.join(OUT, name), "wb") as f:
        f.write(body.encode())
    entries.append(
        {
            "url": url,
            "file": name,
            "status": status,
            "headers": {"content-type": content_type},
            "fetched_at": FETCHED_AT,
        }
    )


def page(title, body):
    return f"<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n{body}\n</body></html>\n"


def board(title, threads, pages, extra=""):
    items = "\n".join(f'  <li><a class="thread-link" href="{href}">{text}</a></li>' for href, text in threads)
    nav = " ".join(f'<a class="board-page" href="{href}">{n}</a>' for href, n in pages)
    return page(title, f"<h1>{title}</h1>\n<ul>\n{items}\n</ul>\n<div class=\"pagination\">{nav}</div>\n{extra}")


def thread(title, posts, pages=()):
    out = [f"<h1>{title}</h1>"]
    for user, text, sig in posts:
        sig_html = f'\n  <div class="signature">{sig}</div>' if sig else ""
        out.append(
            f'<article class="post">\n  <span class="username">{user}</span>\n'
            f'  <div class="message">{text}</div>{sig_html}\n</article>'
        )
    if pages:
        nav = " ".join(f'<a class="thread-page" href="{href}">{n}</a>' for href, n in pages)
        out.append(f'<div class="pagination">{nav}</div>')
    return page(title, "\n".join(out))


def forums():
    m = BHW + "/forums/marketplace/"
    t = m + "threads/"
    record(
        m,
        board(
            "Marketplace",
            [(t + "netflix-spotify-accounts.101/", "Streaming accounts"), (t + "fresh-combolists.102/", "Combolists")],
            [("/forums/marketplace/page-2", 2), ("/forums/marketplace/page-3", 3)],
        ),
    )
    record(
        m + "page-2",
        board(
            "Marketplace - page 2",
            [
                (t + "openbullet-configs.103/", "Configs"),
                (t + "gift-card-deals.104/", "Gift cards"),
                (t + "deleted-thread.199/", "Deleted"),
            ],
            [("/forums/marketplace/", 1), ("/forums/marketplace/page-3", 3)],
            '<p>See also the <a class="thread-link" href="/forums/lounge/threads/off-topic.7/">lounge</a>.</p>',
        ),
    )
    record(
        m + "page-3",
        board(
            "Marketplace - page 3",
            [(t + "databases-and-games.105/", "Databases"), ("https://elsewhere.test/threads/1/", "Mirror")],
            [("/forums/marketplace/", 1), ("/forums/marketplace/page-2", 2)],
        ),
    )
    record(
        t + "netflix-spotify-accounts.101/",
        thread(
            "Netflix and Spotify premium accounts",
            [
                ("DealKing", "Premium streaming accounts with warranty.", "Shop: https://shoppy.gg/@DealKing"),
                ("nordmaster", "Vouch, got my account instantly.", "discord: nordmaster#0001"),
            ],
            [(t + "netflix-spotify-accounts.101/page-2", 2)],
        ),
    )
    record(
        t + "netflix-spotify-accounts.101/page-2",
        thread(
            "Netflix and Spotify premium accounts - page 2",
            [("Dark Lord", "Still works?", "")],
            [(t + "netflix-spotify-accounts.101/", 1)],
        ),
    )
    record(
        t + "fresh-combolists.102/",
        thread(
            "Fresh private combolists",
            [
                ("combo_queen", "Daily HQ combos, all domains.", "telegram @combo_queen"),
                ("DealKing", "Bump for a good seller.", "Shop: https://shoppy.gg/@DealKing"),
            ],
        ),
    )
    record(
        t + "openbullet-configs.103/",
        thread(
            "OpenBullet configs and captures",
            [
                ("cfgsmith", "Configs with full capture.", '<a href="https://shoppy.gg/@CfgSmith">my configs</a>'),
                ("xX_Silent_Xx", "Selling too.", "https://shoppy.gg/@silentstore"),
                ("streamhub", "Need a config for a VPN checker.", ""),
            ],
        ),
    )
    record(
        t + "gift-card-deals.104/",
        thread(
            "Gift card deals",
            [
                ("nordmaster", "Any amazon cards?", ""),
                ("giftgalaxy", "Cards and food vouchers in my store.", "discord.gg/giftgalaxy"),
            ],
        ),
    )
    record(t + "deleted-thread.199/", page("Error", "<p>Internal error</p>"), status=500)
    record(
        t + "databases-and-games.105/",
        thread(
            "Databases and game accounts",
            [
                ("leakbase", "Fresh database dumps.", "store: shoppy.gg/@leak-base"),
                ("pixelvault", "Rare game skins and gift cards.", ""),
            ],
        ),
    )

    c = CRACKED
    record(
        c + "/Forum-Marketplace",
        board(
            "Marketplace",
            [("/Thread-Combos-and-Accounts", "Combos and accounts"), ("/Thread-Configs-and-Checkers", "Configs")],
            [],
        ),
    )
    record(
        c + "/Thread-Combos-and-Accounts",
        thread(
            "Combos and accounts",
            [
                ("ComboKing", "Private combo lists.", "https://shoppy.gg/@comboking"),
                ("DealKing", "Streaming accounts, check my store.", ""),
                ("netflixer", "Looking for netflix.", ""),
            ],
        ),
    )
    record(
        c + "/Thread-Configs-and-Checkers",
        thread(
            "Configs and checkers",
            [
                ("AccountsPlaza", "Streaming and VPN accounts.", ""),
                ("configlab", "Configs, checkers and captures.", '<a href="https://shoppy.gg/configlab">configlab store</a>'),
                ("ComboKing", "Try my latest pack.", "https://shoppy.gg/product/ABC123"),
            ],
        ),
    )


def p(title, price, kind, **extra):
    item = {"title": title, "price": price, "type": kind}
    item.update(extra)
    return item


SHOPS = {
    "dealking": [
        p("Netflix Premium 4K account lifetime warranty", 4.99, "account"),
        p("Spotify Premium lifetime account", 2.5, "account"),
        p("Hulu no ads account warranty", 3, "account"),
        p("Disney+ premium account", 3.5, "account"),
        p("NordVPN account 1 year warranty", 5, "account"),
        p("Netflix Premium screen account", "$1.99", "account"),
        p("Spotify family upgrade lifetime", 6, "service"),
        p("Streaming bundle Netflix Hulu Disney+", 9.99, "account"),
    ],
    "combo_queen": [
        p(f"Private HQ combo list {n}k {dom}", price, "file")
        for n, dom, price in [
            (100, "gmail", 5), (250, "yahoo", 8), (50, "hotmail", 3), (300, "mixed", 10), (80, "gaming", 4),
            (120, "streaming", 5), (200, "gmail", 7), (60, "yahoo", 3), (90, "hotmail", 4), (150, "mixed", 6),
            (75, "gaming", 3), (400, "mixed", 12), (30, "vpn", 2), (45, "yahoo", 2), (55, "gmail", 3),
            (500, "mixed", 15), (65, "hotmail", 3), (85, "streaming", 4), (95, "gaming", 4), (110, "yahoo", 5),
            (130, "gmail", 6), (140, "hotmail", 6), (160, "mixed", 7), (170, "vpn", 7), (180, "yahoo", 8),
            (190, "gmail", 8), (210, "hotmail", 9), (220, "mixed", 9), (230, "gaming", 10), (240, "streaming", 10),
        ]
    ],
    "cfgsmith": [
        p("OpenBullet config Netflix full capture", 10, "file"),
        p("OpenBullet config Spotify capture proxyless", 8, "file"),
        p("OpenBullet config NordVPN capture", 7, "file"),
        p("Sentry MBA config Hulu capture", 6, "file"),
        p("OpenBullet config Disney+ full capture", 9, "file"),
        p("Custom config service", 25, "service"),
    ],
    "streamhub": [
        p("Netflix Premium account 1 month", 2, "account"),
        p("Spotify Premium account lifetime", 3, "account"),
        p("NordVPN premium account", 4, "account"),
        p("ExpressVPN account 1 year", 6, "account"),
        p("Hulu live TV account", 5, "account"),
        p("VPN checker config capture", 7, "file"),
    ],
    "giftgalaxy": [
        p("Amazon gift card 50 USD", 20, "account"),
        p("UberEats gift card 25 USD", 8, "account"),
        p("DoorDash food voucher method", 15, "service"),
        p("Steam gift card 20 USD", 9, "account"),
        p("Fortnite skins account rare", 30, "account"),
        p("UberEats food order service", 12, "service"),
    ],
    "pixelvault": [
        p("Fortnite rare skins account", 25, "account"),
        p("Minecraft premium account full access", 3, "account"),
        p("Steam account with games", 10, "account"),
        p("Amazon gift card 10 USD", 5, "account"),
        p("Minecraft and Fortnite mystery bundle", 12, "bundle"),
        p("Steam gift card 50 USD", 22, "account", stock=4),
    ],
    "leak-base": [
        p("Gaming forum database dump 2019", 35, "file"),
        p("Shopping site database leaked records", 40, "file"),
        p("Combo list 1.5M database records", 20, "file"),
        p("Streaming site database dump", 30, "file"),
        p("Adult site database dump", 0, "file"),
        p("Forum DB dump 2020 full", 18, "file"),
        p("Private database lookup service", 50, "service"),
    ],
    "comboking": [
        p("Combo List | 528M Yahoo.com", 400, "file"),
        p("Private HQ combo list gmail", 6, "file"),
        p("Combo list streaming 2M lines", 15, "file"),
        p("Combo checker config capture", 9, "file"),
        p("Terms of Service. READ BEFORE BUYING", 600, "service"),
        p("Contact me on discord for custom combos", 750, "service"),
    ],
    "accountsplaza": [
        p("Netflix Premium account warranty", 2.5, "account"),
        p("Spotify Premium account", 1.5, "account"),
        p("NordVPN account 2 years", 6, "account"),
        p("ExpressVPN premium account", 5, "account"),
        p("Minecraft premium account", 2, "account"),
        p("Discord - DONT BUY", 999, "service"),
    ],
    "configlab": [
        p("OpenBullet config Amazon capture", 12, "file"),
        p("OpenBullet config UberEats capture proxyless", 11, "file"),
        p("Checker config Steam full capture", 10, "file"),
        p("Sentry MBA config Spotify", 6, "file"),
        {"price": 5, "type": "file"},
        p("----", 750, "service"),
    ],
}

INVALID = ["nordmaster", "xx_silent_xx", "leakbase", "silentstore", "netflixer"]


def shop_api():
    for handle, products in SHOPS.items():
        record(f"{API}/shops/{handle}", json.dumps({"handle": handle, "status": "active"}), content_type="application/json")
        pages = [products[i : i + 10] for i in range(0, len(products), 10)] + [[]]
        for n, items in enumerate(pages, start=1):
            record(f"{API}/shops/{handle}/products?page={n}", json.dumps(items), content_type="application/json")
    for handle in INVALID:
        record(f"{API}/shops/{handle}", json.dumps({"error": "not found"}), status=404, content_type="application/json")


def main():
    shutil.rmtree(OUT, ignore_errors=True)
    os.makedirs(OUT)
    forums()
    shop_api()
    entries.sort(key=lambda e: e["url"])
    with open(os.path.join(OUT, "index.json"), "w") as f:
        json.dump({"version": 1, "entries": entries}, f, indent=2)
        f.write("\n")
    print(f"{len(entries)} responses written to {OUT}")


if __name__ == "__main__":
    main()
