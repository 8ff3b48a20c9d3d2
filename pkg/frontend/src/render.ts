// DOM renderers, one per page. All role-dependent decisions come from the
// view model; this layer only builds elements and calls the API client.

import { ApiClient, ApiError, NetworkError } from './api.js'
import type { ClientSession } from './session.js'
import type { Degree, DissertationView, SearchHit } from './types.js'
import {
  ROUTES,
  ViewRole,
  degreeOk,
  homeRoute,
  navigation,
  passwordOk,
  resultActions,
  usernameOk,
  yearOk,
} from './viewmodel.js'

export interface AppContext {
  api: ApiClient
  session(): ClientSession | null
  role(): ViewRole
  navigate(route: string): void
  saveSession(session: ClientSession): void
  clearSession(): void
}

type Renderer = (ctx: AppContext, params: URLSearchParams) => HTMLElement

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value
    else node.setAttribute(key, value)
  }
  node.append(...children)
  return node
}

function banner(kind: 'error' | 'success', text: string): HTMLElement {
  return el('div', { class: `banner ${kind}`, role: 'alert' }, text)
}

function showError(host: HTMLElement, err: unknown): void {
  host.querySelectorAll('.banner.error').forEach((b) => b.remove())
  let message: string
  if (err instanceof ApiError) message = err.message
  else if (err instanceof NetworkError) message = `${err.message} — please retry`
  else message = 'something went wrong'
  host.prepend(banner('error', message))
}

function showSuccess(host: HTMLElement, text: string): void {
  host.querySelectorAll('.banner').forEach((b) => b.remove())
  host.prepend(banner('success', text))
}

function field(labelText: string, input: HTMLElement): HTMLElement {
  return el('label', { class: 'field' }, el('span', {}, labelText), input)
}

function textInput(name: string, type = 'text', placeholder = ''): HTMLInputElement {
  return el('input', { name, type, placeholder })
}

function degreeSelect(name: string, allowEmpty = false): HTMLSelectElement {
  const select = el('select', { name })
  if (allowEmpty) select.append(el('option', { value: '' }, 'any degree'))
  select.append(el('option', { value: 'Master' }, 'Master'))
  select.append(el('option', { value: 'PhD' }, 'PhD'))
  return select
}

function navBar(ctx: AppContext): HTMLElement {
  const items = navigation(ctx.role())
  const session = ctx.session()
  const links = items.map((item) => el('a', { href: item.route }, item.label))
  const who = session ? `${session.username} (${session.role})` : 'guest'
  return el('nav', { class: 'topnav' }, ...links, el('span', { class: 'who' }, who))
}

function page(ctx: AppContext, title: string, ...children: (Node | string)[]): HTMLElement {
  return el('div', { class: 'page' }, navBar(ctx), el('h1', {}, title), ...children)
}

function triggerDownload(blob: Blob, filename: string): void {
  const url = URL.createObjectURL(blob)
  const link = el('a', { href: url, download: filename })
  document.body.append(link)
  link.click()
  link.remove()
  URL.revokeObjectURL(url)
}

function resultsTable(ctx: AppContext, host: HTMLElement, hits: SearchHit[]): HTMLElement {
  if (hits.length === 0) return el('p', { class: 'empty' }, 'No dissertations found.')
  const actions = resultActions(ctx.role())
  const rows = hits.map((hit) => {
    const d = hit.dissertation
    const cell = el('td', { class: 'actions' })
    const viewLink = el('a', { href: `#/dissertation?id=${encodeURIComponent(d.dissertation_id)}` }, 'View')
    cell.append(viewLink)
    if (actions.download) {
      const btn = el('button', { type: 'button' }, 'Download')
      btn.onclick = () =>
        ctx.api
          .downloadFile(d.dissertation_id)
          .then((blob) => triggerDownload(blob, d.file.original_filename))
          .catch((err) => showError(host, err))
      cell.append(btn)
    }
    if (actions.addFavorite) {
      const btn = el('button', { type: 'button' }, 'Add to favourite')
      btn.onclick = () =>
        ctx.api
          .addFavorite(d.dissertation_id)
          .then(() => showSuccess(host, `"${d.title}" added to the list successfully`))
          .catch((err) => showError(host, err))
      cell.append(btn)
    }
    return el(
      'tr',
      {},
      el('td', {}, d.title),
      el('td', {}, d.author_name),
      el('td', {}, String(d.year)),
      el('td', {}, d.degree),
      el('td', {}, hit.score.toFixed(3)),
      cell,
    )
  })
  const table = el(
    'table',
    { class: 'results' },
    el(
      'thead',
      {},
      el(
        'tr',
        {},
        el('th', {}, 'Title'),
        el('th', {}, 'Author'),
        el('th', {}, 'Year'),
        el('th', {}, 'Degree'),
        el('th', {}, 'Score'),
        el('th', {}, 'Actions'),
      ),
    ),
    el('tbody', {}, ...rows),
  )
  return table
}

function searchBox(ctx: AppContext, initial = ''): HTMLElement {
  const input = textInput('q', 'search', 'keywords…')
  input.value = initial
  const form = el('form', { class: 'searchbox' }, input, el('button', { type: 'submit' }, 'Search'))
  form.onsubmit = (event) => {
    event.preventDefault()
    ctx.navigate(`/search?q=${encodeURIComponent(input.value)}`)
  }
  return form
}

// -- pages ------------------------------------------------------------------------

const renderIndex: Renderer = (ctx) =>
  page(
    ctx,
    'Dissertations Repository',
    el('p', {}, 'Search the faculty dissertation collection. Anyone can search; log in to download.'),
    searchBox(ctx),
  )

const renderSearchResults: Renderer = (ctx, params) => {
  const q = params.get('q') ?? ''
  const host = page(ctx, 'Search results', searchBox(ctx, q))
  const slot = el('div', { class: 'slot' }, 'Searching…')
  const printBtn = el('button', { type: 'button', class: 'print' }, 'Print results')
  printBtn.onclick = () => window.print()
  host.append(printBtn, slot)
  ctx.api
    .search(q, 0, 50)
    .then((resp) => {
      slot.replaceChildren(resultsTable(ctx, host, resp.results))
      slot.append(el('p', { class: 'count' }, `${resp.total} result(s)`))
    })
    .catch((err) => {
      slot.replaceChildren()
      showError(host, err)
    })
  return host
}

const renderDissertation: Renderer = (ctx, params) => {
  const id = params.get('id') ?? ''
  const host = page(ctx, 'Dissertation')
  const slot = el('div', { class: 'slot' }, 'Loading…')
  host.append(slot)
  ctx.api
    .getDissertation(id)
    .then((d) => {
      const rows: [string, string][] = [
        ['Title', d.title],
        ['Author', d.author_name],
        ['Degree', d.degree],
        ['Year', String(d.year)],
        ['Topic', d.topic],
        ['Keywords', d.keywords.join(', ')],
        ['Abstract', d.abstract],
        ['File', `${d.file.original_filename} (${d.file.size_bytes} bytes)`],
      ]
      const table = el(
        'table',
        { class: 'detail' },
        ...rows.map(([k, v]) => el('tr', {}, el('th', {}, k), el('td', {}, v))),
      )
      slot.replaceChildren(table)
      if (resultActions(ctx.role()).download) {
        const btn = el('button', { type: 'button' }, 'Download')
        btn.onclick = () =>
          ctx.api
            .downloadFile(d.dissertation_id)
            .then((blob) => triggerDownload(blob, d.file.original_filename))
            .catch((err) => showError(host, err))
        slot.append(btn)
      }
    })
    .catch((err) => {
      slot.replaceChildren()
      showError(host, err)
    })
  return host
}

const renderSignup: Renderer = (ctx) => {
  const matrix = textInput('matrix_number')
  const username = textInput('username')
  const password = textInput('password', 'password')
  const email = textInput('email', 'email')
  const form = el(
    'form',
    { class: 'stack' },
    field('Matrix number', matrix),
    field('Username', username),
    field('Password (at least 8 characters)', password),
    field('E-mail address', email),
    el('button', { type: 'submit' }, 'Sign up'),
  )
  const host = page(ctx, 'Registration', form)
  form.onsubmit = (event) => {
    event.preventDefault()
    if (!passwordOk(password.value)) {
      showError(host, new ApiError(400, 'VALIDATION', 'password must be at least 8 characters'))
      return
    }
    if (!usernameOk(username.value)) {
      showError(host, new ApiError(400, 'VALIDATION', 'username must be 3-32 characters (letters, digits, . _ -)'))
      return
    }
    ctx.api
      .signup(matrix.value, username.value, password.value, email.value)
      .then(() => {
        showSuccess(host, 'Registration complete. You can now log in.')
        form.replaceWith(el('p', {}, el('a', { href: '#/login' }, 'Continue to the login page')))
      })
      .catch((err) => showError(host, err))
  }
  return host
}

const renderLogin: Renderer = (ctx) => {
  const username = textInput('username')
  const password = textInput('password', 'password')
  const form = el(
    'form',
    { class: 'stack' },
    field('Username', username),
    field('Password', password),
    el('button', { type: 'submit' }, 'Log in'),
  )
  const host = page(ctx, 'Login', form)
  form.onsubmit = (event) => {
    event.preventDefault()
    ctx.api
      .login(username.value, password.value)
      .then((resp) => {
        ctx.saveSession({ token: resp.token, role: resp.role, username: resp.username })
        ctx.navigate(homeRoute(resp.role))
      })
      .catch((err) => showError(host, err))
  }
  return host
}

const renderLogout: Renderer = (ctx) => {
  const host = page(ctx, 'Logging out…')
  ctx.api
    .logout()
    .catch(() => undefined) // the token dies either way
    .then(() => {
      ctx.clearSession()
      ctx.navigate('/')
    })
  return host
}

const renderMemberHome: Renderer = (ctx) => {
  const session = ctx.session()
  return page(
    ctx,
    `Welcome, ${session?.username ?? 'member'}`,
    el('p', {}, 'Search dissertations, keep favorites, and download what you need.'),
    searchBox(ctx),
    el(
      'ul',
      { class: 'links' },
      el('li', {}, el('a', { href: '#/favorites' }, 'Your favourite page')),
      el('li', {}, el('a', { href: '#/advanced' }, 'Advanced search')),
    ),
  )
}

const renderFavorites: Renderer = (ctx) => {
  const host = page(ctx, 'Favourite dissertations')
  const slot = el('div', { class: 'slot' }, 'Loading…')
  host.append(slot)

  const load = () =>
    ctx.api
      .listFavorites()
      .then((resp) => {
        if (resp.results.length === 0) {
          slot.replaceChildren(el('p', { class: 'empty' }, 'Your favourite page is empty.'))
          return
        }
        const boxes = new Map<string, HTMLInputElement>()
        const rows = resp.results.map((d: DissertationView) => {
          const box = el('input', { type: 'checkbox' })
          boxes.set(d.dissertation_id, box)
          return el(
            'tr',
            {},
            el('td', {}, box),
            el('td', {}, el('a', { href: `#/dissertation?id=${encodeURIComponent(d.dissertation_id)}` }, d.title)),
            el('td', {}, d.author_name),
            el('td', {}, String(d.year)),
          )
        })
        const remove = el('button', { type: 'button' }, 'Remove selected')
        remove.onclick = () => {
          const ids = [...boxes.entries()].filter(([, b]) => b.checked).map(([id]) => id)
          ctx.api
            .removeFavorites(ids)
            .then(() => {
              showSuccess(host, 'Removed successfully; you are still on your favourite page.')
              return load()
            })
            .catch((err) => showError(host, err))
        }
        slot.replaceChildren(
          el(
            'table',
            { class: 'results' },
            el('tbody', {}, ...rows),
          ),
          remove,
        )
      })
      .catch((err) => {
        slot.replaceChildren()
        showError(host, err)
      })
  load()
  return host
}

const renderAdvancedSearch: Renderer = (ctx) => {
  const keywords = textInput('keywords')
  const author = textInput('author')
  const topic = textInput('topic')
  const degree = degreeSelect('degree', true)
  const yearFrom = textInput('year_from', 'number')
  const yearTo = textInput('year_to', 'number')
  const form = el(
    'form',
    { class: 'stack' },
    field('Keywords', keywords),
    field('Author contains', author),
    field('Topic contains', topic),
    field('Degree', degree),
    field('Year from', yearFrom),
    field('Year to', yearTo),
    el('button', { type: 'submit' }, 'Search'),
  )
  const host = page(ctx, 'Advanced search', form)
  const slot = el('div', { class: 'slot' })
  host.append(slot)
  form.onsubmit = (event) => {
    event.preventDefault()
    const request: Record<string, unknown> = { limit: 50 }
    if (keywords.value.trim()) request.keywords = keywords.value
    if (author.value.trim()) request.author = author.value
    if (topic.value.trim()) request.topic = topic.value
    if (degree.value && degreeOk(degree.value)) request.degree = degree.value
    if (yearFrom.value) request.year_from = Number(yearFrom.value)
    if (yearTo.value) request.year_to = Number(yearTo.value)
    ctx.api
      .advancedSearch(request)
      .then((resp) => {
        slot.replaceChildren(resultsTable(ctx, host, resp.results))
        slot.append(el('p', { class: 'count' }, `${resp.total} result(s)`))
      })
      .catch((err) => showError(host, err))
  }
  return host
}

const renderAdminHome: Renderer = (ctx) =>
  page(
    ctx,
    'Administrator home',
    el(
      'ul',
      { class: 'links' },
      el('li', {}, el('a', { href: '#/admin/users' }, 'User processes: add, search, edit, delete')),
      el('li', {}, el('a', { href: '#/admin/upload' }, 'Upload a dissertation')),
      el('li', {}, el('a', { href: '#/advanced' }, 'Advanced search')),
      el('li', {}, el('a', { href: '#/admin/password' }, 'Change password')),
    ),
  )

const renderAdminUsers: Renderer = (ctx) => {
  const host = page(ctx, 'User processes')

  // add user (provisioning)
  const matrix = textInput('matrix_number')
  const name = textInput('full_name')
  const degree = degreeSelect('degree')
  const addForm = el(
    'form',
    { class: 'stack boxed' },
    el('h2', {}, 'Add user'),
    field('Matrix number', matrix),
    field("User's name", name),
    field('Degree', degree),
    el('button', { type: 'submit' }, 'Add user'),
  )
  addForm.onsubmit = (event) => {
    event.preventDefault()
    ctx.api
      .provisionUser(matrix.value, name.value, degree.value as Degree)
      .then((user) =>
        showSuccess(host, `Information for ${user.matrix_number} uploaded successfully; the student can now sign up.`),
      )
      .catch((err) => showError(host, err))
  }

  // search users, with edit/delete on each row
  const searchMatrix = textInput('matrix')
  const searchName = textInput('name')
  const searchForm = el(
    'form',
    { class: 'stack boxed' },
    el('h2', {}, 'Search user'),
    field('Matrix number', searchMatrix),
    field("User's name contains", searchName),
    el('button', { type: 'submit' }, 'Search'),
  )
  const slot = el('div', { class: 'slot' })

  const runSearch = () =>
    ctx.api
      .findUsers(searchMatrix.value.trim() || undefined, searchName.value.trim() || undefined, 0, 50)
      .then((resp) => {
        if (resp.results.length === 0) {
          slot.replaceChildren(el('p', { class: 'empty' }, 'No users match.'))
          return
        }
        const rows = resp.results.map((user) => {
          const edit = el('button', { type: 'button' }, 'Edit')
          edit.onclick = () => {
            const newName = window.prompt("User's name", user.full_name)
            if (newName === null) return
            ctx.api
              .editUser(user.user_id, { full_name: newName })
              .then(() => {
                showSuccess(host, 'Profile saved successfully in the database.')
                return runSearch()
              })
              .catch((err) => showError(host, err))
          }
          const del = el('button', { type: 'button' }, 'Delete')
          del.onclick = () =>
            ctx.api
              .deleteUser(user.user_id)
              .then(() => {
                showSuccess(host, `${user.matrix_number} deleted successfully.`)
                return runSearch() // same search, one fewer row
              })
              .catch((err) => showError(host, err))
          return el(
            'tr',
            {},
            el('td', {}, user.matrix_number),
            el('td', {}, user.full_name),
            el('td', {}, user.degree),
            el('td', {}, user.status),
            el('td', { class: 'actions' }, edit, del),
          )
        })
        slot.replaceChildren(
          el(
            'table',
            { class: 'results' },
            el(
              'thead',
              {},
              el(
                'tr',
                {},
                el('th', {}, 'Matrix'),
                el('th', {}, 'Name'),
                el('th', {}, 'Degree'),
                el('th', {}, 'Status'),
                el('th', {}, 'Actions'),
              ),
            ),
            el('tbody', {}, ...rows),
          ),
        )
      })
      .catch((err) => showError(host, err))

  searchForm.onsubmit = (event) => {
    event.preventDefault()
    runSearch()
  }

  host.append(addForm, searchForm, slot)
  return host
}

const renderAdminUpload: Renderer = (ctx) => {
  const title = textInput('title')
  const author = textInput('author_name')
  const topic = textInput('topic')
  const keywords = textInput('keywords', 'text', 'comma, separated')
  const abstract = el('textarea', { name: 'abstract', rows: '4' })
  const degree = degreeSelect('degree')
  const year = textInput('year', 'number')
  const file = el('input', { type: 'file', name: 'file' })
  const form = el(
    'form',
    { class: 'stack' },
    field('Title', title),
    field('Author', author),
    field('Topic', topic),
    field('Keywords', keywords),
    field('Abstract', abstract),
    field('Degree', degree),
    field('Year', year),
    field('Dissertation file', file),
    el('button', { type: 'submit' }, 'Upload'),
  )
  const host = page(ctx, 'Upload dissertation', form)
  form.onsubmit = (event) => {
    event.preventDefault()
    const chosen = file.files?.[0]
    if (!chosen) {
      showError(host, new ApiError(400, 'VALIDATION', 'choose a file to upload'))
      return
    }
    const yearNum = Number(year.value)
    if (!yearOk(yearNum, new Date().getFullYear())) {
      showError(host, new ApiError(400, 'VALIDATION', `year must be between 1900 and ${new Date().getFullYear()}`))
      return
    }
    ctx.api
      .uploadDissertation(
        {
          title: title.value,
          author_name: author.value,
          topic: topic.value,
          abstract: abstract.value,
          keywords: keywords.value
            .split(',')
            .map((k) => k.trim())
            .filter((k) => k.length > 0),
          degree: degree.value as Degree,
          year: yearNum,
        },
        chosen,
        chosen.name,
      )
      .then((d) => {
        showSuccess(host, `"${d.title}" uploaded successfully.`)
        form.reset()
      })
      .catch((err) => showError(host, err))
  }
  return host
}

const renderAdminPassword: Renderer = (ctx) => {
  const oldPw = textInput('old_password', 'password')
  const newPw = textInput('new_password', 'password')
  const form = el(
    'form',
    { class: 'stack' },
    field('Current password', oldPw),
    field('New password (at least 8 characters)', newPw),
    el('button', { type: 'submit' }, 'Change password'),
  )
  const host = page(ctx, 'Change password', form)
  form.onsubmit = (event) => {
    event.preventDefault()
    if (!passwordOk(newPw.value)) {
      showError(host, new ApiError(400, 'VALIDATION', 'password must be at least 8 characters'))
      return
    }
    ctx.api
      .changePassword(oldPw.value, newPw.value)
      .then(() => {
        showSuccess(host, 'Password changed.')
        form.reset()
      })
      .catch((err) => showError(host, err))
  }
  return host
}

const renderNotFound: Renderer = (ctx) =>
  page(ctx, 'Page not found', el('a', { href: '#/' }, 'Back to the main page'))

export const PAGES: Record<string, Renderer> = {
  'index': renderIndex,
  'search-results': renderSearchResults,
  'dissertation-view': renderDissertation,
  'signup': renderSignup,
  'login': renderLogin,
  'logout': renderLogout,
  'member-home': renderMemberHome,
  'favorites': renderFavorites,
  'advanced-search': renderAdvancedSearch,
  'admin-home': renderAdminHome,
  'admin-users': renderAdminUsers,
  'admin-upload': renderAdminUpload,
  'admin-password': renderAdminPassword,
}

export function renderRoute(ctx: AppContext, route: string, params: URLSearchParams): HTMLElement {
  const spec = ROUTES[route]
  const renderer = spec ? PAGES[spec.page] : undefined
  return (renderer ?? renderNotFound)(ctx, params)
}
